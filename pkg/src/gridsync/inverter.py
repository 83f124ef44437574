"""Behavioral H-bridge: sine-triangle SPWM, square-wave baseline, output filter, spectra.

Switches are ideal (no dead time, no conduction drop).  The comparison is
naturally sampled: the triangle is evaluated at each simulation instant,
shifted by ``SpwmConfig.sample_offset`` of a sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import LowPassFilter
from .errors import AliasingError, ConfigError, ContractError, SpectrumError
from .signals import SignalSpec, TimeBase, generate

SCHEMES = ("bipolar", "unipolar")


@dataclass(frozen=True)
class SpwmConfig:
    carrier_hz: float = 5000.0
    modulation_index: float = 0.8
    dc_bus_volts: float = 1.0
    scheme: str = "bipolar"
    filter_cutoff_hz: float = 300.0
    # comparator instants trail the sample clock by this fraction of a sample;
    # 0.25 keeps samples off the carrier vertices so rising- and falling-slope
    # samples interleave, doubling duty resolution when fs/carrier is an integer
    sample_offset: float = 0.25

    def __post_init__(self):
        if not self.carrier_hz > 0:
            raise ConfigError("carrier_hz must be positive")
        if not 0.0 < self.modulation_index <= 1.0:
            raise ConfigError("modulation_index must lie in (0, 1]")
        if not self.dc_bus_volts > 0:
            raise ConfigError("dc_bus_volts must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.filter_cutoff_hz > 0:
            raise ConfigError("filter_cutoff_hz must be positive")
        if not 0.0 <= self.sample_offset < 1.0:
            raise ConfigError("sample_offset must lie in [0, 1)")

    def comparator_times(self, tb: TimeBase, n: int, start: int = 0) -> np.ndarray:
        return (np.arange(start, start + n) + self.sample_offset) * tb.dt

    def validate(self, tb: TimeBase, fundamental_hz: float) -> None:
        if self.carrier_hz < 20.0 * fundamental_hz:
            raise ConfigError(
                f"carrier {self.carrier_hz} Hz must be at least 20x the fundamental ({fundamental_hz} Hz)"
            )
        if not self.carrier_hz < tb.sample_rate_hz / 4:
            raise ConfigError(
                f"carrier {self.carrier_hz} Hz needs more than 4 samples per period at "
                f"{tb.sample_rate_hz} Hz (carrier must be < sample_rate/4)"
            )
        if self.filter_cutoff_hz >= tb.nyquist_hz:
            raise AliasingError("output filter cutoff must be below Nyquist")


def triangle(t, carrier_hz: float):
    """Symmetric triangle with peaks +-1; trough (-1) at t = 0."""
    if isinstance(t, float):
        return 1.0 - 4.0 * abs((t * carrier_hz) % 1.0 - 0.5)
    frac = np.mod(np.asarray(t, dtype=float) * carrier_hz, 1.0)
    out = 1.0 - 4.0 * np.abs(frac - 0.5)
    return float(out) if out.ndim == 0 else out


def _check_modulation(cfg: SpwmConfig, r) -> None:
    if np.any(np.abs(cfg.modulation_index * np.asarray(r)) > 1.0 + 1e-12):
        raise ContractError(
            f"over-modulation: |reference| must not exceed 1/modulation_index = {1 / cfg.modulation_index:.6g}"
        )


def spwm_step(cfg: SpwmConfig, reference_sample: float, t: float) -> float:
    """Bridge output level for one instant."""
    if abs(cfg.modulation_index * reference_sample) > 1.0 + 1e-12:
        _check_modulation(cfg, reference_sample)
    tri = triangle(float(t), cfg.carrier_hz)
    m = cfg.modulation_index * reference_sample
    if cfg.scheme == "bipolar":
        return cfg.dc_bus_volts if m >= tri else -cfg.dc_bus_volts
    leg_a = 1.0 if m >= tri else 0.0
    leg_b = 1.0 if -m >= tri else 0.0
    return (leg_a - leg_b) * cfg.dc_bus_volts


def spwm_wave(cfg: SpwmConfig, reference, t) -> np.ndarray:
    """Vectorized :func:`spwm_step` over arrays of reference samples and times."""
    reference = np.asarray(reference, dtype=float)
    _check_modulation(cfg, reference)
    tri = triangle(t, cfg.carrier_hz)
    m = cfg.modulation_index * reference
    if cfg.scheme == "bipolar":
        return np.where(m >= tri, cfg.dc_bus_volts, -cfg.dc_bus_volts)
    return ((m >= tri).astype(float) - (-m >= tri).astype(float)) * cfg.dc_bus_volts


def square_step(reference_sample: float, dc_bus_volts: float = 1.0) -> float:
    return dc_bus_volts if reference_sample >= 0 else -dc_bus_volts


def square_wave(reference, dc_bus_volts: float = 1.0) -> np.ndarray:
    return np.where(np.asarray(reference) >= 0, dc_bus_volts, -dc_bus_volts)


def output_filter(tb: TimeBase, cutoff_hz: float = 300.0, initial: float = 0.0) -> LowPassFilter:
    """Second-order Butterworth standing in for the inverter's analog LC filter."""
    return LowPassFilter(cutoff_hz, tb.sample_rate_hz, "second-order", initial=initial)


def output_filter_step(state: LowPassFilter, level: float) -> float:
    return state.step(level)


@dataclass(frozen=True)
class SpectrumResult:
    fundamental_hz: float
    magnitudes: dict[int, float]
    thd: float
    periods: int = 0
    samples: int = 0

    def relative(self, order: int) -> float:
        m1 = self.magnitudes[1]
        return self.magnitudes[order] / m1 if m1 > 0 else math.inf


def whole_period_length(n_available: int, tb: TimeBase, fundamental_hz: float, tol: float = 1e-6) -> tuple[int, int]:
    """Largest (periods, samples) fitting in ``n_available`` with an integer sample count."""
    per = tb.sample_rate_hz / fundamental_hz
    for p in range(math.floor(n_available / per + 1e-9), 0, -1):
        exact = p * per
        n = round(exact)
        if abs(exact - n) <= tol and n <= n_available:
            return p, n
    raise SpectrumError(
        f"no whole number of {fundamental_hz} Hz periods fits an integer sample count "
        f"within {n_available} samples at {tb.sample_rate_hz} Hz"
    )


def spectrum(seq, tb: TimeBase, fundamental_hz: float, max_order: int = 9) -> SpectrumResult:
    """Harmonic magnitudes by single-bin projection over the trailing whole periods."""
    x = np.asarray(seq, dtype=float)
    if max_order < 1:
        raise ContractError("max_order must be >= 1")
    if max_order * fundamental_hz >= tb.nyquist_hz:
        raise AliasingError(f"harmonic {max_order} of {fundamental_hz} Hz is at/above Nyquist")
    periods, n = whole_period_length(len(x), tb, fundamental_hz)
    x = x[len(x) - n:]
    phase = 2.0 * math.pi * fundamental_hz * tb.dt * np.arange(n)
    mags = {}
    for k in range(1, max_order + 1):
        mags[k] = float(2.0 / n * abs(np.dot(x, np.exp(-1j * k * phase))))
    m1 = mags[1]
    rest = math.sqrt(sum(mags[k] ** 2 for k in range(2, max_order + 1)))
    thd = rest / m1 if m1 > 0 else math.inf
    return SpectrumResult(fundamental_hz, mags, thd, periods, n)


@dataclass
class ChainResult:
    switching: np.ndarray
    filtered: np.ndarray
    raw_spectrum: SpectrumResult
    filtered_spectrum: SpectrumResult


@dataclass
class SpwmComparison:
    fundamental_hz: float
    spwm: ChainResult
    square: ChainResult
    config: SpwmConfig = field(default_factory=SpwmConfig)

    @property
    def third_harmonic_ratio(self) -> float:
        """Filtered square relative m3 divided by filtered SPWM relative m3."""
        s = self.spwm.filtered_spectrum.relative(3)
        q = self.square.filtered_spectrum.relative(3)
        return q / s if s > 0 else math.inf


def simulate_chain(levels, tb: TimeBase, cutoff_hz: float, fundamental_hz: float, settle_s: float, max_order: int) -> ChainResult:
    flt = output_filter(tb, cutoff_hz)
    filtered = flt.process(levels)
    skip = int(round(settle_s * tb.sample_rate_hz))
    return ChainResult(
        np.asarray(levels),
        filtered,
        spectrum(levels[skip:], tb, fundamental_hz, max_order),
        spectrum(filtered[skip:], tb, fundamental_hz, max_order),
    )


def compare_spwm_square(
    fundamental_hz: float,
    cfg: SpwmConfig = SpwmConfig(),
    tb: TimeBase = TimeBase(100_000.0),
    duration_s: float = 0.5,
    settle_s: float = 0.1,
    max_order: int = 9,
) -> SpwmComparison:
    """Drive the SPWM bridge and the square-wave bridge with the same sine; compare spectra."""
    cfg.validate(tb, fundamental_hz)
    n = int(round(duration_s * tb.sample_rate_hz))
    ref = generate(SignalSpec(frequency_hz=fundamental_hz), tb, (), n)
    t = cfg.comparator_times(tb, n)
    spwm_levels = spwm_wave(cfg, ref, t)
    sq_levels = square_wave(ref, cfg.dc_bus_volts)
    return SpwmComparison(
        fundamental_hz,
        simulate_chain(spwm_levels, tb, cfg.filter_cutoff_hz, fundamental_hz, settle_s, max_order),
        simulate_chain(sq_levels, tb, cfg.filter_cutoff_hz, fundamental_hz, settle_s, max_order),
        cfg,
    )
