"""Fixed-step control blocks: IIR low-pass, moving average, PID and NCO.

Every block owns mutable state and advances by exactly one sample per
``step`` call.  Inputs are checked for finiteness because a NaN inside a
closed loop poisons every state it touches.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import signal as sps

from .errors import AliasingError, ConfigError, NonFiniteInputError

TWO_PI = 2.0 * math.pi


def wrap_phase(phase: float) -> float:
    """Reduce to [0, 2*pi); tiny negatives would otherwise round up to 2*pi."""
    p = phase % TWO_PI
    return 0.0 if p >= TWO_PI else p


def _check_finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise NonFiniteInputError(f"{what} received non-finite value {x!r}")
    return x


class LowPassFilter:
    """Butterworth low-pass of order 1 or 2, discretized by the bilinear transform.

    The recurrence is evaluated in transposed direct form II.  ``initial``
    sets the state as if that constant had been applied forever, which gives
    a bumpless start when the expected steady value is known.
    """

    KINDS = {"first-order": 1, "second-order": 2}

    def __init__(self, cutoff_hz: float, sample_rate_hz: float, kind: str = "first-order", initial: float = 0.0):
        if kind not in self.KINDS:
            raise ConfigError(f"unknown filter kind {kind!r}; expected one of {sorted(self.KINDS)}")
        if not cutoff_hz > 0:
            raise ConfigError("cutoff_hz must be positive")
        if cutoff_hz >= sample_rate_hz / 2:
            raise AliasingError(f"cutoff {cutoff_hz} Hz is at/above Nyquist ({sample_rate_hz / 2} Hz)")
        self.kind = kind
        self.order = self.KINDS[kind]
        self.cutoff_hz = float(cutoff_hz)
        self.dt = 1.0 / sample_rate_hz
        b, a = sps.butter(self.order, cutoff_hz, btype="low", fs=sample_rate_hz)
        b = b / a[0]
        a = a / a[0]
        dc = float(np.sum(b) / np.sum(a))
        if abs(dc - 1.0) > 1e-9:
            raise ConfigError(f"discretized filter has DC gain {dc!r}, expected 1")
        self.b = [float(v) for v in b]
        self.a = [float(v) for v in a]
        self._zi_unit = sps.lfilter_zi(b, a)
        self.reset(initial)

    @property
    def time_constant_s(self) -> float:
        return 1.0 / (TWO_PI * self.cutoff_hz)

    def reset(self, value: float = 0.0) -> None:
        self.z = [float(v) * value for v in self._zi_unit]
        self.y = float(value)

    def step(self, x: float) -> float:
        _check_finite(x, "LowPassFilter.step")
        b, a, z = self.b, self.a, self.z
        y = b[0] * x + z[0]
        if self.order == 1:
            z[0] = b[1] * x - a[1] * y
        else:
            z[0] = b[1] * x - a[1] * y + z[1]
            z[1] = b[2] * x - a[2] * y
        self.y = y
        return y

    def process(self, x) -> np.ndarray:
        """Filter a whole block; equivalent to calling ``step`` on each sample."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise NonFiniteInputError("LowPassFilter.process received non-finite samples")
        y, zf = sps.lfilter(self.b, self.a, x, zi=np.asarray(self.z))
        self.z = [float(v) for v in zf]
        if len(y):
            self.y = float(y[-1])
        return y

    def magnitude_at(self, freq_hz: float) -> float:
        """Exact magnitude response of the discretized recurrence."""
        _, h = sps.freqz(self.b, self.a, worN=[freq_hz], fs=1.0 / self.dt)
        return float(abs(h[0]))


class MovingAverage:
    """Boxcar mean over the last ``length`` samples.

    With the window set to one period of the reference it nulls the
    fundamental and every harmonic of it, including the 2f product ripple.
    The window may be resized while running; history up to ``max_length``
    samples is retained for that purpose.
    """

    def __init__(self, length: int, max_length: int | None = None, initial: float = 0.0):
        if length < 1:
            raise ConfigError("moving-average length must be >= 1")
        self.max_length = max(int(max_length or length), int(length))
        self._buf = [float(initial)] * self.max_length
        self._head = 0  # index of the oldest sample, i.e. the next write slot
        self.length = int(length)
        self._sum = float(initial) * self.length
        self._steps = 0

    def _ago(self, k: int) -> float:
        """Sample written ``k`` steps ago (k=1 is the newest)."""
        return self._buf[(self._head - k) % self.max_length]

    def resize(self, length: int) -> None:
        length = int(min(max(length, 1), self.max_length))
        if length != self.length:
            self.length = length
            self._resum()

    def _resum(self):
        self._sum = math.fsum(self._ago(k) for k in range(1, self.length + 1))

    def step(self, x: float) -> float:
        _check_finite(x, "MovingAverage.step")
        self._sum += x - self._ago(self.length)
        self._buf[self._head] = x
        self._head = (self._head + 1) % self.max_length
        self._steps += 1
        # periodic exact re-summation bounds floating drift of the running sum
        if self._steps % 65536 == 0:
            self._resum()
        return self._sum / self.length


class PidController:
    """PID with clamped output and conditional-integration anti-windup.

    e = setpoint - process_variable.  The integral uses the rectangular
    rule, the derivative a backward difference (zero on the first step).
    While the unclamped output lies outside the limits and the error would
    push it further out, the integral is frozen.
    """

    def __init__(
        self,
        kp: float,
        ki: float = 0.0,
        kd: float = 0.0,
        *,
        dt: float,
        setpoint: float = 0.5,
        out_min: float = -math.inf,
        out_max: float = math.inf,
        anti_windup: bool = True,
    ):
        if not dt > 0:
            raise ConfigError("dt must be positive")
        if not out_min < out_max:
            raise ConfigError("out_min must be below out_max")
        self.kp, self.ki, self.kd = float(kp), float(ki), float(kd)
        self.dt = float(dt)
        self.setpoint = float(setpoint)
        self.out_min, self.out_max = float(out_min), float(out_max)
        self.anti_windup = anti_windup
        self.reset()

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error: float | None = None
        self.output = 0.0
        self.saturated = False

    def step(self, process_variable: float) -> float:
        _check_finite(process_variable, "PidController.step")
        e = self.setpoint - process_variable
        deriv = 0.0 if self.prev_error is None else (e - self.prev_error) / self.dt
        integral = self.integral + e * self.dt
        raw = self.kp * e + self.ki * integral + self.kd * deriv
        out = min(max(raw, self.out_min), self.out_max)
        self.saturated = out != raw
        pushing_out = (raw > self.out_max and self.ki * e > 0) or (raw < self.out_min and self.ki * e < 0)
        if not (self.anti_windup and pushing_out):
            self.integral = integral
        self.prev_error = e
        self.output = out
        return out


class Nco:
    """Phase accumulator producing a unit sine; the discrete-time VCO."""

    def __init__(self, sample_rate_hz: float, phase_rad: float = 0.0):
        self.sample_rate_hz = float(sample_rate_hz)
        self.dt = 1.0 / self.sample_rate_hz
        self.phase = wrap_phase(float(phase_rad))

    def step(self, frequency_hz: float) -> float:
        _check_finite(frequency_hz, "Nco.step")
        if frequency_hz < 0:
            raise ConfigError(f"NCO frequency must be >= 0, got {frequency_hz}")
        if frequency_hz >= 0.5 * self.sample_rate_hz:
            raise AliasingError(f"NCO frequency {frequency_hz} Hz is at/above Nyquist")
        self.phase = wrap_phase(self.phase + TWO_PI * frequency_hz * self.dt)
        return math.sin(self.phase)


def nco_step(state: Nco, frequency_hz: float, dt: float | None = None) -> float:
    """Functional alias of :meth:`Nco.step`; ``dt`` must match the NCO's own."""
    if dt is not None and not math.isclose(dt, state.dt, rel_tol=1e-12):
        raise ConfigError(f"dt {dt} does not match NCO dt {state.dt}")
    return state.step(frequency_hz)


def lpf_step(flt: LowPassFilter, x: float) -> float:
    return flt.step(x)


def pid_step(pid: PidController, process_variable: float) -> float:
    return pid.step(process_variable)
