import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gridsync.errors import AliasingError, ConfigError, ContractError, NonFiniteInputError, SpectrumError
from gridsync.inverter import (
    SpwmConfig,
    compare_spwm_square,
    output_filter,
    output_filter_step,
    spectrum,
    spwm_step,
    spwm_wave,
    square_step,
    square_wave,
    triangle,
    whole_period_length,
)
from gridsync.signals import SignalSpec, TimeBase, generate

TB = TimeBase(100_000.0)
CFG = SpwmConfig()

# |H| of the bilinear second-order Butterworth, 300 Hz cutoff, fs 100 kHz, at 5 kHz:
# 1/sqrt(1 + (tan(pi*5000/fs)/tan(pi*300/fs))**4)
FILTER_GAIN_5KHZ = 0.0035411165553021523


def sine(f, n, tb=TB):
    return generate(SignalSpec(frequency_hz=f), tb, (), n)


def switching(f, cycles, cfg=CFG, tb=TB):
    n = round(cycles * tb.sample_rate_hz / f)
    ref = sine(f, n, tb)
    return spwm_wave(cfg, ref, cfg.comparator_times(tb, n))


def test_triangle_shape():
    assert triangle(0.0, 5000.0) == -1.0
    assert triangle(1e-4, 5000.0) == pytest.approx(1.0)
    assert triangle(0.5e-4, 5000.0) == pytest.approx(0.0)
    np.testing.assert_allclose(triangle(np.array([0.0, 1e-4]), 5000.0), [-1.0, 1.0])


def test_comparator_definition():
    assert spwm_step(CFG, 1.0, 0.0) == CFG.dc_bus_volts
    assert spwm_step(CFG, -1.0, 1e-4) == -CFG.dc_bus_volts


def test_zero_reference_gives_half_duty():
    n = int(TB.sample_rate_hz / CFG.carrier_hz)
    t = CFG.comparator_times(TB, n)
    levels = [spwm_step(CFG, 0.0, tt) for tt in t]
    pos = sum(1 for v in levels if v > 0)
    assert abs(pos - (n - pos)) <= 1


def test_fundamental_follows_modulation_index():
    sp = spectrum(switching(50.0, 1), TB, 50.0)
    assert sp.magnitudes[1] == pytest.approx(0.8 * CFG.dc_bus_volts, rel=0.02)


def test_over_modulation_is_an_error():
    with pytest.raises(ContractError):
        spwm_step(CFG, 1.3, 0.0)
    with pytest.raises(ContractError):
        spwm_wave(CFG, np.array([0.0, 1.26]), np.array([0.0, 1e-5]))
    spwm_step(SpwmConfig(modulation_index=0.5), 2.0, 0.0)


def test_square_step_examples():
    assert square_step(0.3) == 1.0
    assert square_step(-0.7) == -1.0
    assert square_step(0.0) == 1.0
    assert square_step(-0.1, 2.0) == -2.0


def test_square_of_sine_has_third_harmonic_one_third():
    sp = spectrum(square_wave(sine(50.0, 20000)), TB, 50.0)
    assert sp.relative(3) == pytest.approx(1 / 3, rel=0.01)


def test_output_filter_dc_gain():
    flt = output_filter(TB)
    y = [output_filter_step(flt, 1.0) for _ in range(5000)][-1]
    assert y == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(NonFiniteInputError):
        output_filter_step(flt, math.inf)


def test_output_filter_attenuates_carrier_by_48db():
    t = np.arange(20000) * TB.dt
    y = output_filter(TB).process(np.sin(2 * math.pi * 5000 * t))
    tail = y[-2000:]
    gain = 0.5 * (tail.max() - tail.min())
    assert 20 * math.log10(gain) <= -48.0
    assert gain == pytest.approx(FILTER_GAIN_5KHZ, rel=0.01)


def test_filtered_spwm_is_nearly_sinusoidal():
    sw = switching(50.0, 15)
    y = output_filter(TB).process(sw)
    sp = spectrum(y[int(0.1 * TB.sample_rate_hz):], TB, 50.0)
    # the 300 Hz filter passes 50 Hz at unity gain within 0.3%
    assert sp.magnitudes[1] == pytest.approx(0.8, rel=0.02)
    for k in (2, 3, 4):
        assert sp.relative(k) <= 0.01


def test_spectrum_of_pure_sine():
    sp = spectrum(sine(50.0, 20000), TB, 50.0)
    assert sp.magnitudes[1] == pytest.approx(1.0, abs=1e-6)
    assert all(sp.magnitudes[k] <= 1e-6 for k in range(2, 10))
    assert sp.thd <= 1e-6
    assert sp.periods == 10


def test_spectrum_of_ideal_square_matches_fourier_series():
    n = 20000
    x = np.where(np.arange(n) % 2000 < 1000, 1.0, -1.0)
    sp = spectrum(x, TB, 50.0)
    assert sp.magnitudes[1] == pytest.approx(4 / math.pi, rel=0.01)
    assert sp.magnitudes[3] == pytest.approx(4 / (3 * math.pi), rel=0.01)
    assert all(sp.magnitudes[k] <= 1e-3 for k in (2, 4, 6, 8))
    want_thd = math.sqrt(sum((1 / k) ** 2 for k in (3, 5, 7, 9)))
    assert sp.thd == pytest.approx(want_thd, rel=0.01)


def test_spectrum_trims_to_trailing_whole_periods():
    x = np.concatenate([np.full(777, 5.0), sine(50.0, 4000)])
    sp = spectrum(x, TB, 50.0)
    assert sp.samples == 4000 and sp.periods == 2
    assert sp.magnitudes[1] == pytest.approx(1.0, abs=1e-9)


def test_spectrum_errors():
    with pytest.raises(SpectrumError):
        spectrum(np.zeros(1000), TB, 50.0)
    with pytest.raises(AliasingError):
        spectrum(np.zeros(4000), TimeBase(1000.0), 50.0, max_order=10)
    with pytest.raises(SpectrumError):
        whole_period_length(10**6, TB, 33.3333333)


def test_filtered_spwm_third_harmonic_ten_times_lower():
    cmp = compare_spwm_square(50.0, CFG, TB, duration_s=0.5)
    assert cmp.third_harmonic_ratio >= 10.0


def test_config_validation():
    with pytest.raises(ConfigError):
        SpwmConfig(modulation_index=0.0)
    with pytest.raises(ConfigError):
        SpwmConfig(modulation_index=1.1)
    with pytest.raises(ConfigError):
        SpwmConfig(scheme="tri-level")
    with pytest.raises(ConfigError):
        CFG.validate(TimeBase(20000.0), 50.0)
    with pytest.raises(ConfigError):
        SpwmConfig(carrier_hz=900.0).validate(TB, 50.0)
    CFG.validate(TB, 65.0)


@given(f=st.floats(35.0, 65.0), m=st.floats(0.01, 1.0), offset=st.floats(0.0, 0.99))
def test_bipolar_output_has_two_levels(f, m, offset):
    cfg = SpwmConfig(modulation_index=m, dc_bus_volts=3.0, sample_offset=offset)
    sw = switching(f, 1, cfg)
    assert set(np.unique(sw)) <= {-3.0, 3.0}


def test_unipolar_levels_and_fundamental():
    cfg = SpwmConfig(scheme="unipolar")
    sw = switching(50.0, 1, cfg)
    assert set(np.unique(sw)) == {-1.0, 0.0, 1.0}
    assert spectrum(sw, TB, 50.0).magnitudes[1] == pytest.approx(0.8, rel=0.02)


@pytest.mark.parametrize("m", [0.2, 0.4, 0.6, 0.8, 1.0])
def test_linear_modulation_law(m):
    # 1 MHz so that duty quantization stays well under 2% even at m = 0.2
    tb = TimeBase(1_000_000.0)
    cfg = SpwmConfig(modulation_index=m)
    sp = spectrum(switching(50.0, 2, cfg, tb), tb, 50.0, max_order=3)
    assert sp.magnitudes[1] == pytest.approx(m, rel=0.02)


@pytest.mark.parametrize("f", [35.0, 50.0, 65.0])
def test_harmonic_reduction_ordering(f):
    cmp = compare_spwm_square(f, CFG, TB, duration_s=0.5)
    s, q = cmp.spwm.filtered_spectrum, cmp.square.filtered_spectrum
    assert s.relative(3) < q.relative(3)
    assert s.relative(5) < q.relative(5)


@given(data=st.data(), n=st.integers(400, 4000))
def test_bessel_inequality(data, n):
    tb = TimeBase(20000.0)
    cycles = data.draw(st.integers(1, max(1, n // 500)))
    f = cycles * tb.sample_rate_hz / n
    x = data.draw(arrays(np.float64, n, elements=st.floats(-5.0, 5.0)))
    max_order = min(9, math.ceil(tb.nyquist_hz / f) - 1)
    sp = spectrum(x, tb, f, max_order)
    window = x[len(x) - sp.samples:]
    assert sum(m * m for m in sp.magnitudes.values()) / 2 <= np.mean(window ** 2) * (1 + 1e-9) + 1e-12
