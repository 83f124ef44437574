"""Rising-edge zero-crossing frequency detector with hysteresis re-arming.

A crossing is registered when the signal goes from negative to
non-negative while the detector is ARMED.  The detector then waits for the
signal to rise above the positive level and afterwards to fall below the
negative level; only then does it re-arm.  Noise riding on the slope near
zero therefore cannot register a second crossing in the same period.

Each registered crossing is time-stamped by linear interpolation between
the two straddling samples, and the period between consecutive crossings
gives the frequency estimate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ConfigError, ContractError, NonFiniteInputError
from .signals import TimeBase


class Stage(enum.Enum):
    ARMED = "armed"
    AWAIT_POSITIVE = "await_positive"
    AWAIT_NEGATIVE = "await_negative"


# the only legal moves of the validation machine
TRANSITIONS = {
    Stage.ARMED: Stage.AWAIT_POSITIVE,
    Stage.AWAIT_POSITIVE: Stage.AWAIT_NEGATIVE,
    Stage.AWAIT_NEGATIVE: Stage.ARMED,
}


@dataclass(frozen=True)
class HysteresisBand:
    positive_level: float = 0.1
    negative_level: float = -0.1

    def __post_init__(self):
        if not self.negative_level < 0 < self.positive_level:
            raise ConfigError(
                f"hysteresis levels must satisfy negative < 0 < positive, got "
                f"({self.negative_level}, {self.positive_level})"
            )

    @classmethod
    def symmetric(cls, level: float) -> "HysteresisBand":
        return cls(abs(level), -abs(level))

    @property
    def half_width(self) -> float:
        return min(self.positive_level, -self.negative_level)

    def check_amplitude(self, amplitude: float, dc_offset: float = 0.0) -> None:
        if max(self.positive_level, -self.negative_level) >= amplitude:
            raise ConfigError(
                f"hysteresis levels ({self.negative_level}, {self.positive_level}) "
                f"must be strictly inside the signal amplitude {amplitude}"
            )
        if abs(dc_offset) >= self.half_width:
            raise ConfigError(
                f"dc offset {dc_offset} exceeds the hysteresis band half-width {self.half_width}"
            )


@dataclass(frozen=True)
class FrequencyEstimate:
    hz: float
    at_time_s: float  # interpolated time of the crossing that closed the period
    sample_index: int  # sample at which the estimate became available


def interpolate_crossing(prev: float, cur: float, prev_index: int, tb: TimeBase) -> float:
    """Time at which the straight line through (prev, cur) reaches zero."""
    if not (prev < 0 <= cur):
        raise ContractError(f"interpolate_crossing needs prev < 0 <= cur, got prev={prev}, cur={cur}")
    return (prev_index + prev / (prev - cur)) * tb.dt


def frequency_from_crossings(t1: float, t2: float) -> float:
    if not t2 > t1:
        raise ContractError(f"crossing times must increase, got t1={t1}, t2={t2}")
    return 1.0 / (t2 - t1)


class ZeroCrossingDetector:
    """Streaming detector; feed one sample per ``step`` call.

    ``smoothing`` in [0, 1) enables an exponential average of successive
    period estimates (0 disables it and reports the raw two-crossing value).
    """

    def __init__(self, band: HysteresisBand, tb: TimeBase, smoothing: float = 0.0, keep_crossings: bool = False):
        if not 0.0 <= smoothing < 1.0:
            raise ConfigError("smoothing must lie in [0, 1)")
        self.band = band
        self.tb = tb
        self.smoothing = smoothing
        self.keep_crossings = keep_crossings
        self.reset()

    def reset(self) -> None:
        self.stage = Stage.ARMED
        self.previous_sample: float | None = None
        self.previous_crossing_time_s: float | None = None
        self.current_estimate_hz: float | None = None
        self.sample_index = 0
        self.crossing_count = 0
        self.crossing_times: list[float] = []

    def _advance(self, new_stage: Stage) -> None:
        if TRANSITIONS[self.stage] is not new_stage:
            raise AssertionError(f"illegal transition {self.stage} -> {new_stage}")
        self.stage = new_stage

    def step(self, sample: float) -> FrequencyEstimate | None:
        if not math.isfinite(sample):
            raise NonFiniteInputError(f"ZeroCrossingDetector received {sample!r}")
        estimate = None
        idx = self.sample_index
        prev = self.previous_sample
        stage = self.stage
        if stage is Stage.ARMED:
            if prev is not None and prev < 0.0 <= sample:
                t = interpolate_crossing(prev, sample, idx - 1, self.tb)
                estimate = self._register(t, idx)
                self._advance(Stage.AWAIT_POSITIVE)
        elif stage is Stage.AWAIT_POSITIVE:
            if sample > self.band.positive_level:
                self._advance(Stage.AWAIT_NEGATIVE)
        elif sample < self.band.negative_level:
            self._advance(Stage.ARMED)
        self.previous_sample = sample
        self.sample_index = idx + 1
        return estimate

    def _register(self, t: float, idx: int) -> FrequencyEstimate | None:
        self.crossing_count += 1
        if self.keep_crossings:
            self.crossing_times.append(t)
        last = self.previous_crossing_time_s
        self.previous_crossing_time_s = t
        if last is None:
            return None
        hz = frequency_from_crossings(last, t)
        if hz >= self.tb.nyquist_hz:
            return None
        if self.smoothing and self.current_estimate_hz is not None:
            hz = self.smoothing * self.current_estimate_hz + (1.0 - self.smoothing) * hz
        self.current_estimate_hz = hz
        return FrequencyEstimate(hz, t, idx)

    def process(self, samples) -> list[FrequencyEstimate]:
        """Run a whole block through ``step`` and collect the emitted estimates."""
        step = self.step
        out = []
        for x in (samples.tolist() if hasattr(samples, "tolist") else samples):
            est = step(x)
            if est is not None:
                out.append(est)
        return out


def zcd_step(state: ZeroCrossingDetector, sample: float, band: HysteresisBand, tb: TimeBase) -> FrequencyEstimate | None:
    """Functional form of :meth:`ZeroCrossingDetector.step`.

    ``band`` and ``tb`` must be the ones the detector was built with.
    """
    if tb.sample_rate_hz != state.tb.sample_rate_hz:
        raise ConfigError(
            f"time base {tb.sample_rate_hz} Hz differs from detector's {state.tb.sample_rate_hz} Hz"
        )
    if band != state.band:
        raise ConfigError("hysteresis band differs from the detector's")
    return state.step(sample)
