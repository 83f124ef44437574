"""Product-detector phase-locked loop driven by a zero-crossing frequency estimate.

One loop iteration:

    v_out = sin(nco_phase + phase_shift)        generated voltage after the lag block
    d     = v_ref * v_out                       DC part is cos(theta)/2
    pv    = period_average(lowpass(d))          process variable
    u     = pid(pv)                             setpoint 0.5
    f_cmd = clamp(f_zcd + u, f_min, f_max)
    nco_phase += 2*pi*f_cmd*dt

The error 0.5 - cos(theta)/2 never changes sign, so the loop cannot tell a
lead from a lag.  With a positive proportional gain the NCO always runs
slightly fast while the error is non-zero, sweeping theta upward until the
generated wave catches the reference from behind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dsp import LowPassFilter, MovingAverage, Nco, PidController
from .errors import ConfigError, ContractError, DivergenceError, NonFiniteInputError, NotReadyError
from .signals import TimeBase

TWO_PI = 2.0 * math.pi
MODES = ("product", "quadrature")


@dataclass(frozen=True)
class LoopFilterSpec:
    kind: str = "first-order"
    cutoff_hz: float = 10.0
    # boxcar over one reference period after the IIR stage; nulls the 2f ripple
    period_average: bool = True

    def __post_init__(self):
        if self.kind not in LowPassFilter.KINDS:
            raise ConfigError(f"loop_filter.kind must be one of {sorted(LowPassFilter.KINDS)}")
        if not self.cutoff_hz > 0:
            raise ConfigError("loop_filter.cutoff_hz must be positive")


@dataclass(frozen=True)
class PidSpec:
    # desk-tuned: see README "Loop tuning"; ki stays 0 because the error is one-sided
    kp: float = 20.0
    ki: float = 0.0
    kd: float = 0.5
    out_min: float = -60.0
    out_max: float = 60.0
    anti_windup: bool = True

    def __post_init__(self):
        if not self.out_min < self.out_max:
            raise ConfigError("pid.out_min must be below pid.out_max")


@dataclass(frozen=True)
class PllConfig:
    loop_filter: LoopFilterSpec = field(default_factory=LoopFilterSpec)
    pid: PidSpec = field(default_factory=PidSpec)
    phase_shift_rad: float = 0.0
    detector_mode: str = "product"
    lock_band: float = 0.002
    lock_dwell_s: float = 0.1
    f_min_hz: float = 20.0
    f_max_hz: float = 80.0
    divergence_s: float = 1.0

    def __post_init__(self):
        if self.detector_mode not in MODES:
            raise ConfigError(f"detector_mode must be one of {MODES}, got {self.detector_mode!r}")
        if not 0.0 <= self.phase_shift_rad < TWO_PI:
            raise ConfigError("phase_shift_rad must lie in [0, 2*pi)")
        if not self.lock_band > 0:
            raise ConfigError("lock_band must be positive")
        if not self.lock_dwell_s > 0:
            raise ConfigError("lock_dwell_s must be positive")
        if not 0 < self.f_min_hz < self.f_max_hz:
            raise ConfigError("need 0 < f_min_hz < f_max_hz")
        if not self.divergence_s > 0:
            raise ConfigError("divergence_s must be positive")

    @property
    def setpoint(self) -> float:
        return 0.5 if self.detector_mode == "product" else 0.0

    def validate(self, tb: TimeBase) -> None:
        if self.f_max_hz >= tb.nyquist_hz:
            raise ConfigError(f"f_max_hz {self.f_max_hz} must be below Nyquist {tb.nyquist_hz}")
        if self.loop_filter.cutoff_hz >= tb.nyquist_hz:
            raise ConfigError("loop filter cutoff must be below Nyquist")


def phase_detector(v_ref: float, v_out: float, mode: str = "product", v_out_quad: float | None = None) -> float:
    """Multiply reference and generated samples.

    In quadrature mode the caller passes the generated wave delayed by 90
    degrees as ``v_out_quad``; its product with the reference has DC value
    sin(theta)/2.
    """
    if mode == "product":
        x = v_ref * v_out
    elif mode == "quadrature":
        if v_out_quad is None:
            raise ContractError("quadrature mode needs v_out_quad")
        x = v_ref * v_out_quad
    else:
        raise ConfigError(f"unknown detector mode {mode!r}")
    if not math.isfinite(x):
        raise NonFiniteInputError(f"phase detector produced {x!r}")
    return x


class PhaseLockedLoop:
    """Loop state plus the step function.

    Before the first frequency estimate arrives the NCO may be advanced with
    :meth:`free_run`; the loop filter is preloaded with the setpoint so the
    controller starts from zero error.
    """

    def __init__(self, config: PllConfig, tb: TimeBase, initial_phase_rad: float = 0.0, nominal_frequency_hz: float = 50.0):
        config.validate(tb)
        self.config = config
        self.tb = tb
        self.dt = tb.dt
        self.setpoint = config.setpoint
        fs = tb.sample_rate_hz
        self.nco = Nco(fs, initial_phase_rad)
        lf = config.loop_filter
        self.lpf = LowPassFilter(lf.cutoff_hz, fs, lf.kind, initial=self.setpoint)
        self.averager = None
        if lf.period_average:
            self.averager = MovingAverage(
                max(1, round(fs / nominal_frequency_hz)),
                max_length=math.ceil(fs / config.f_min_hz) + 1,
                initial=self.setpoint,
            )
        p = config.pid
        self.pid = PidController(
            p.kp, p.ki, p.kd, dt=self.dt, setpoint=self.setpoint,
            out_min=p.out_min, out_max=p.out_max, anti_windup=p.anti_windup,
        )
        self.dwell_samples = math.ceil(round(config.lock_dwell_s * fs, 9))
        self.diverge_samples = math.ceil(round(config.divergence_s * fs, 9))
        self.zcd_frequency_hz: float | None = None
        self.last_error_signal = self.setpoint
        self.detector_output = self.setpoint
        self.control = 0.0
        self.f_cmd = nominal_frequency_hz
        self.locked = False
        self.in_band_count = 0
        self.clamp_count = 0
        self.clamp_engaged = False

    @property
    def time_in_band_s(self) -> float:
        return self.in_band_count * self.dt

    def set_frequency(self, hz: float) -> None:
        """Feed the latest zero-crossing estimate (the feed-forward term)."""
        if not (hz > 0 and math.isfinite(hz)):
            raise ContractError(f"frequency estimate must be positive and finite, got {hz!r}")
        self.zcd_frequency_hz = hz
        if self.averager is not None:
            self.averager.resize(round(self.tb.sample_rate_hz / hz))

    def output_sample(self) -> float:
        return math.sin(self.nco.phase + self.config.phase_shift_rad)

    def free_run(self, frequency_hz: float) -> float:
        """Advance the NCO open-loop; returns the sample before the advance."""
        v_out = self.output_sample()
        self.f_cmd = frequency_hz
        self.nco.step(frequency_hz)
        return v_out

    def step(self, v_ref: float, v_out: float | None = None) -> float:
        """One closed-loop iteration; returns the generated sample used.

        ``v_out`` may carry an externally simulated output (e.g. the
        filtered inverter voltage); by default the loop's own NCO sample
        after the phase-shift block is used.
        """
        if self.zcd_frequency_hz is None:
            raise NotReadyError("PLL stepped before the first zero-crossing estimate")
        cfg = self.config
        quad = None
        if v_out is None:
            v_out = self.output_sample()
            if cfg.detector_mode == "quadrature":
                quad = math.sin(self.nco.phase + cfg.phase_shift_rad - 0.5 * math.pi)
        elif cfg.detector_mode == "quadrature":
            raise ConfigError("quadrature mode needs the internal NCO output path")
        d = phase_detector(v_ref, v_out, cfg.detector_mode, quad)
        pv = self.lpf.step(d)
        if self.averager is not None:
            pv = self.averager.step(pv)
        u = self.pid.step(pv)
        raw = self.zcd_frequency_hz + u
        f_cmd = min(max(raw, cfg.f_min_hz), cfg.f_max_hz)
        self.clamp_engaged = f_cmd != raw
        if self.clamp_engaged:
            self.clamp_count += 1
            if self.clamp_count > self.diverge_samples:
                raise DivergenceError(
                    f"frequency command clamped for more than {cfg.divergence_s} s "
                    f"(raw command {raw:.3f} Hz)"
                )
        else:
            self.clamp_count = 0
        self.nco.step(f_cmd)
        self.detector_output = d
        self.last_error_signal = pv
        self.control = u
        self.f_cmd = f_cmd
        if abs(pv - self.setpoint) <= cfg.lock_band:
            self.in_band_count += 1
        else:
            self.in_band_count = 0
        self.locked = self.in_band_count >= self.dwell_samples
        return v_out


def pll_step(state: PhaseLockedLoop, config: PllConfig, v_ref: float, tb: TimeBase) -> float:
    """Functional form of :meth:`PhaseLockedLoop.step` for the loop's own config."""
    if config is not state.config and config != state.config:
        raise ConfigError("config differs from the one the loop was built with")
    if tb.sample_rate_hz != state.tb.sample_rate_hz:
        raise ConfigError("time base differs from the one the loop was built with")
    return state.step(v_ref)


def is_locked(state: PhaseLockedLoop) -> bool:
    return state.locked


def lock_mask(pv, setpoint: float, band: float, dwell_samples: int) -> np.ndarray:
    """Offline lock flag for a recorded process-variable trace.

    Sample k is locked when the last ``dwell_samples`` samples up to and
    including k all lie within ``band`` of ``setpoint``.
    """
    pv = np.asarray(pv, dtype=float)
    inside = np.abs(pv - setpoint) <= band
    run = np.zeros(len(pv), dtype=int)
    count = 0
    for i, ok in enumerate(inside.tolist()):
        count = count + 1 if ok else 0
        run[i] = count
    return run >= dwell_samples


def measure_phase_error(ref_window, out_window, f_hz: float, tb: TimeBase) -> float:
    """Phase of ``out_window`` relative to ``ref_window`` at ``f_hz``, in degrees.

    Both windows are trimmed to the largest whole number of periods and
    projected onto exp(-j*2*pi*f*t).  Positive means the output leads.
    """
    ref = np.asarray(ref_window, dtype=float)
    out = np.asarray(out_window, dtype=float)
    if ref.shape != out.shape or ref.ndim != 1:
        raise ContractError("windows must be 1-D and of equal length")
    per_period = tb.sample_rate_hz / f_hz
    periods = math.floor(len(ref) / per_period + 1e-9)
    if periods < 2:
        raise ContractError(
            f"window of {len(ref)} samples covers fewer than 2 periods at {f_hz} Hz"
        )
    n = min(len(ref), round(periods * per_period))
    basis = np.exp(-1j * TWO_PI * f_hz * tb.dt * np.arange(n))
    x_ref = np.dot(ref[:n], basis)
    x_out = np.dot(out[:n], basis)
    deg = math.degrees(np.angle(x_out * np.conj(x_ref)))
    return 180.0 if deg == -180.0 else deg
