# SPWM bridge versus square-wave bridge, both through the same 300 Hz output filter.
#
# Run: python demos/03_spwm_spectrum.py

# %%
import numpy as np

from gridsync import SpwmConfig, TimeBase, compare_spwm_square, spectrum
from gridsync.inverter import spwm_wave
from gridsync.signals import SignalSpec, generate

tb = TimeBase(100_000.0)
cfg = SpwmConfig(carrier_hz=5000.0, modulation_index=0.8)

# %% Harmonic magnitudes relative to the fundamental, after filtering.
cmp = compare_spwm_square(50.0, cfg, tb, duration_s=0.5)
print(" k   SPWM raw   SPWM filt   square raw  square filt")
for k in range(1, 10):
    print(
        f"{k:2d}  {cmp.spwm.raw_spectrum.relative(k):9.5f}  {cmp.spwm.filtered_spectrum.relative(k):9.5f}"
        f"   {cmp.square.raw_spectrum.relative(k):9.5f}  {cmp.square.filtered_spectrum.relative(k):9.5f}"
    )
print(f"filtered THD: SPWM {cmp.spwm.filtered_spectrum.thd:.4f}, square {cmp.square.filtered_spectrum.thd:.4f}")
print(f"3rd harmonic, square / SPWM: {cmp.third_harmonic_ratio:.1f}x")

# %% The SPWM fundamental follows the modulation index.
# At 100 kHz small indices quantize coarsely, so 1 MHz is used here.
fine = TimeBase(1_000_000.0)
n = int(fine.sample_rate_hz / 50.0) * 2
ref = generate(SignalSpec(frequency_hz=50.0), fine, (), n)
for m in (0.2, 0.4, 0.6, 0.8, 1.0):
    c = SpwmConfig(modulation_index=m)
    sw = spwm_wave(c, ref, c.comparator_times(fine, n))
    print(f"m = {m:.1f}: fundamental = {spectrum(sw, fine, 50.0, 3).magnitudes[1]:.4f}")

# %% Unipolar switching moves the first carrier sideband group to twice the carrier.
uni = compare_spwm_square(50.0, SpwmConfig(scheme="unipolar"), tb, duration_s=0.5)
sw = uni.spwm.switching[-int(0.1 * tb.sample_rate_hz):]
spec = np.abs(np.fft.rfft(sw)) / len(sw) * 2
freqs = np.fft.rfftfreq(len(sw), tb.dt)
band = (freqs > 1000) & (freqs < 20000)
print(f"unipolar: strongest switching component near {freqs[band][np.argmax(spec[band])]:.0f} Hz")
