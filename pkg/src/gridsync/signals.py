"""Deterministic reference waveforms standing in for the grid voltage.

The phase of a generated signal is accumulated segment by segment, so a
frequency step keeps the waveform continuous.  Noise comes from a seeded
``numpy.random.Generator``; identical arguments give bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AliasingError, ConfigError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TimeBase:
    sample_rate_hz: float = 20_000.0

    def __post_init__(self):
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz!r}")

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def nyquist_hz(self) -> float:
        return 0.5 * self.sample_rate_hz

    def times(self, n: int) -> np.ndarray:
        return np.arange(n) * self.dt


@dataclass(frozen=True)
class Harmonic:
    order: int
    relative_amplitude: float
    phase_rad: float = 0.0

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 2:
            raise ConfigError(f"harmonic order must be an integer >= 2, got {self.order!r}")
        if self.relative_amplitude < 0:
            raise ConfigError("harmonic relative_amplitude must be >= 0")


@dataclass(frozen=True)
class StepEvent:
    """Change the reference frequency and/or jump its phase at ``at_time_s``."""

    at_time_s: float
    new_frequency_hz: float | None = None
    phase_jump_rad: float | None = None

    def __post_init__(self):
        if self.at_time_s < 0:
            raise ConfigError("StepEvent.at_time_s must be >= 0")
        if self.new_frequency_hz is None and self.phase_jump_rad is None:
            raise ConfigError("StepEvent needs new_frequency_hz or phase_jump_rad")
        if self.new_frequency_hz is not None and not self.new_frequency_hz > 0:
            raise ConfigError("StepEvent.new_frequency_hz must be positive")

    def sample_index(self, tb: TimeBase) -> int:
        # first sample at or after the event; rounding guards 0.1*20000 -> 2000.0000000000002
        return math.ceil(round(self.at_time_s * tb.sample_rate_hz, 9))


@dataclass(frozen=True)
class SignalSpec:
    amplitude: float = 1.0
    frequency_hz: float = 50.0
    phase_rad: float = 0.0
    dc_offset: float = 0.0
    harmonics: tuple[Harmonic, ...] = ()
    noise_std: float = 0.0
    # optional hard bound on the noise magnitude; None leaves the Gaussian untouched
    noise_clip: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(self.harmonics))
        if self.amplitude < 0:
            raise ConfigError("amplitude must be >= 0")
        if not self.frequency_hz > 0:
            raise ConfigError("frequency_hz must be positive")
        if not 0.0 <= self.phase_rad < TWO_PI:
            raise ConfigError("phase_rad must lie in [0, 2*pi)")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        if self.noise_clip is not None and not self.noise_clip > 0:
            raise ConfigError("noise_clip must be positive when given")
        orders = [h.order for h in self.harmonics]
        if len(set(orders)) != len(orders):
            raise ConfigError("harmonic orders must be distinct")

    def validate(self, tb: TimeBase, events: Sequence[StepEvent] = ()) -> None:
        """Reject any component that would alias at this sample rate."""
        freqs = [self.frequency_hz] + [
            e.new_frequency_hz for e in events if e.new_frequency_hz is not None
        ]
        top_order = max([1] + [h.order for h in self.harmonics])
        for f in freqs:
            if f >= tb.nyquist_hz:
                raise AliasingError(
                    f"frequency {f} Hz is at/above Nyquist ({tb.nyquist_hz} Hz)"
                )
            if f * top_order >= tb.nyquist_hz:
                raise AliasingError(
                    f"harmonic {top_order} of {f} Hz is at/above Nyquist ({tb.nyquist_hz} Hz)"
                )
        times = [e.at_time_s for e in events]
        if times != sorted(times):
            raise ConfigError("step events must be sorted by time")


def segment_table(spec: SignalSpec, tb: TimeBase, events: Sequence[StepEvent] = ()) -> list[tuple[int, float, float]]:
    """Constant-frequency segments as (start_index, phase_at_start, frequency_hz)."""
    w = TWO_PI * tb.dt
    table = [(0, spec.phase_rad, spec.frequency_hz)]
    for ev in events:
        start, phase, freq = table[-1]
        idx = ev.sample_index(tb)
        new_phase = phase + w * freq * (idx - start)
        if ev.phase_jump_rad is not None:
            new_phase += ev.phase_jump_rad
        new_freq = ev.new_frequency_hz if ev.new_frequency_hz is not None else freq
        if idx == start:
            table[-1] = (idx, new_phase, new_freq)
        else:
            table.append((idx, new_phase, new_freq))
    return table


def phase_track(spec: SignalSpec, tb: TimeBase, events: Sequence[StepEvent], n: int) -> np.ndarray:
    """Unwrapped instantaneous phase of the fundamental for samples 0..n-1."""
    out = np.empty(n)
    w = TWO_PI * tb.dt
    table = segment_table(spec, tb, events)
    for i, (start, phase, freq) in enumerate(table):
        stop = table[i + 1][0] if i + 1 < len(table) else n
        if start >= n:
            break
        stop = min(stop, n)
        out[start:stop] = phase + w * freq * np.arange(stop - start)
    return out


def generate(spec: SignalSpec, tb: TimeBase, events: Sequence[StepEvent] = (), n: int = 1) -> np.ndarray:
    """Sample the reference waveform ``n`` times at ``tb``."""
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    spec.validate(tb, events)
    phase = phase_track(spec, tb, events, n)
    x = spec.amplitude * np.sin(phase)
    for h in spec.harmonics:
        x += spec.amplitude * h.relative_amplitude * np.sin(h.order * phase + h.phase_rad)
    if spec.dc_offset:
        x += spec.dc_offset
    if spec.noise_std > 0:
        noise = np.random.default_rng(spec.seed).normal(0.0, spec.noise_std, n)
        if spec.noise_clip is not None:
            np.clip(noise, -spec.noise_clip, spec.noise_clip, out=noise)
        x += noise
    return x


def phase_of(spec: SignalSpec, tb: TimeBase, sample_index: int, events: Sequence[StepEvent] = ()) -> float:
    """Fundamental phase at ``sample_index``, wrapped to [0, 2*pi)."""
    if sample_index < 0:
        raise ConfigError("sample_index must be >= 0")
    start, phase, freq = 0, spec.phase_rad, spec.frequency_hz
    for seg in segment_table(spec, tb, events):
        if seg[0] > sample_index:
            break
        start, phase, freq = seg
    p = (phase + TWO_PI * tb.dt * freq * (sample_index - start)) % TWO_PI
    return 0.0 if p >= TWO_PI else p


def frequency_at(spec: SignalSpec, t: float, events: Sequence[StepEvent] = ()) -> float:
    """True fundamental frequency in force at time ``t``."""
    f = spec.frequency_hz
    for ev in events:
        if ev.at_time_s <= t and ev.new_frequency_hz is not None:
            f = ev.new_frequency_hz
    return f
