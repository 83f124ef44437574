"""Scenario description, the fixed-step simulation loop, metrics and file output.

Per sample the loop does::

    reference sample -> zero-crossing detector -> PLL (once an estimate exists)
                     -> optional SPWM bridge + output filter -> recorder

Everything is deterministic: the only random source is the reference
noise, seeded from ``Scenario.seed``.
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GridSyncError, NoCrossingError, ScenarioFailure
from .inverter import SpectrumResult, SpwmComparison, SpwmConfig, compare_spwm_square, output_filter, spectrum, spwm_step
from .pll import PhaseLockedLoop, PllConfig, measure_phase_error
from .signals import SignalSpec, StepEvent, TimeBase, frequency_at, generate, phase_of
from .zcd import HysteresisBand, ZeroCrossingDetector

CHANNELS = (
    "v_ref", "v_out", "zcd_hz", "pv", "detector", "u", "f_cmd",
    "nco_phase", "locked", "clamp", "switching", "inverter_out",
)
DEFAULT_RECORD = ("v_ref", "v_out", "zcd_hz", "pv", "f_cmd", "locked")
ZCD_TOLERANCE_HZ = 0.01


@dataclass(frozen=True)
class ZcdSpec:
    positive_level: float = 0.1
    negative_level: float = -0.1
    smoothing: float = 0.0
    # abort if no frequency estimate exists by this time
    timeout_s: float = 0.25

    @property
    def band(self) -> HysteresisBand:
        return HysteresisBand(self.positive_level, self.negative_level)


@dataclass(frozen=True)
class OscillatorSpec:
    """Generated-wave start conditions.

    ``initial_phase_rad`` is the phase of the generated output (after the
    phase-shift block) relative to the reference at t = 0; pi reproduces
    the anti-phase start.  Until the first frequency estimate the NCO runs
    open-loop at ``nominal_frequency_hz``.
    """

    nominal_frequency_hz: float = 50.0
    initial_phase_rad: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    timebase: TimeBase = field(default_factory=TimeBase)
    duration_s: float = 1.0
    reference: SignalSpec = field(default_factory=SignalSpec)
    events: tuple[StepEvent, ...] = ()
    zcd: ZcdSpec = field(default_factory=ZcdSpec)
    oscillator: OscillatorSpec = field(default_factory=OscillatorSpec)
    pll: PllConfig | None = field(default_factory=PllConfig)
    inverter: SpwmConfig | None = None
    record: tuple[str, ...] = DEFAULT_RECORD
    seed: int = 0
    # trailing window used for steady-state metrics
    steady_window_s: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "record", tuple(self.record))

    def validate(self) -> None:
        """Reject bad single values and bad cross-module combinations before running."""
        tb = self.timebase
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if not self.steady_window_s > 0:
            raise ConfigError("steady_window_s must be positive")
        self.reference.validate(tb, self.events)
        band = self.zcd.band
        if not 0.0 <= self.zcd.smoothing < 1.0:
            raise ConfigError("zcd.smoothing must lie in [0, 1)")
        if not self.zcd.timeout_s > 0:
            raise ConfigError("zcd.timeout_s must be positive")
        # a zero-amplitude reference is the declared "null" input; it must reach the timeout
        if self.reference.amplitude > 0:
            band.check_amplitude(self.reference.amplitude, self.reference.dc_offset)
        if self.oscillator.nominal_frequency_hz <= 0 or self.oscillator.nominal_frequency_hz >= tb.nyquist_hz:
            raise ConfigError("oscillator.nominal_frequency_hz must lie in (0, Nyquist)")
        if self.pll is not None:
            self.pll.validate(tb)
        if self.inverter is not None:
            fmax = max([self.reference.frequency_hz] + [e.new_frequency_hz for e in self.events if e.new_frequency_hz])
            if self.pll is not None:
                fmax = max(fmax, self.pll.f_max_hz)
            self.inverter.validate(tb, fmax)
        unknown = [c for c in self.record if c not in CHANNELS]
        if unknown:
            raise ConfigError(f"unknown record channel(s) {unknown}; known: {list(CHANNELS)}")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.timebase.sample_rate_hz))

    def with_overrides(self, *, seed=None, sample_rate_hz=None, duration_s=None, frequency_hz=None) -> "Scenario":
        s = self
        if seed is not None:
            s = dataclasses.replace(s, seed=int(seed))
        if sample_rate_hz is not None:
            s = dataclasses.replace(s, timebase=TimeBase(float(sample_rate_hz)))
        if duration_s is not None:
            s = dataclasses.replace(s, duration_s=float(duration_s))
        if frequency_hz is not None:
            s = dataclasses.replace(s, reference=dataclasses.replace(s.reference, frequency_hz=float(frequency_hz)))
        return s


@dataclass
class Metrics:
    zcd_settling_s: float | None = None
    zcd_final_error_hz: float | None = None
    lock_time_s: float | None = None
    steady_phase_error_deg: float | None = None
    pv_steady: float | None = None
    spectrum_spwm: SpectrumResult | None = None
    spectrum_square: SpectrumResult | None = None

    def as_items(self) -> list[tuple[str, object]]:
        items = [
            ("zcd_settling_s", self.zcd_settling_s),
            ("zcd_final_error_hz", self.zcd_final_error_hz),
            ("lock_time_s", self.lock_time_s),
            ("steady_phase_error_deg", self.steady_phase_error_deg),
            ("pv_steady", self.pv_steady),
        ]
        for tag, spec in (("spwm", self.spectrum_spwm), ("square", self.spectrum_square)):
            if spec is None:
                continue
            items.append((f"{tag}_fundamental_hz", spec.fundamental_hz))
            for k, m in spec.magnitudes.items():
                items.append((f"{tag}_m{k}", m))
            items.append((f"{tag}_thd", spec.thd))
        return items


@dataclass
class Traces:
    time_s: np.ndarray
    channels: dict[str, np.ndarray]

    def __len__(self):
        return len(self.time_s)


@dataclass
class RunResult:
    scenario: Scenario
    metrics: Metrics
    traces: Traces
    # every channel, not only the recorded ones
    full: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def settling_time(times, values, target: float, tol: float) -> float | None:
    """Earliest time after which every sample stays within ``tol`` of ``target``.

    Returns None when the last sample is outside the band (never settled).
    NaN samples count as outside.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) == 0:
        raise ConfigError("settling_time needs a non-empty trace")
    if len(t) != len(v):
        raise ConfigError("times and values must have equal length")
    if len(t) > 1 and not np.all(np.diff(t) > 0):
        raise ConfigError("trace times must be strictly increasing")
    outside = ~(np.abs(v - target) <= tol)
    if outside[-1]:
        return None
    bad = np.flatnonzero(outside)
    return float(t[0] if len(bad) == 0 else t[bad[-1] + 1])


def _steady_window(n: int, scenario: Scenario, f_hz: float) -> slice:
    fs = scenario.timebase.sample_rate_hz
    want = max(int(round(scenario.steady_window_s * fs)), math.ceil(2 * fs / f_hz) + 1)
    return slice(max(0, n - want), n)


def run_scenario(scenario: Scenario) -> RunResult:
    """Execute one scenario; module errors surface as :class:`ScenarioFailure`."""
    scenario.validate()
    tb = scenario.timebase
    fs, dt = tb.sample_rate_hz, tb.dt
    n = scenario.n_samples
    ref_spec = dataclasses.replace(scenario.reference, seed=scenario.seed)
    ref = generate(ref_spec, tb, scenario.events, n)

    osc = scenario.oscillator
    cfg = scenario.pll if scenario.pll is not None else PllConfig()
    shift = cfg.phase_shift_rad
    ref_phase0 = phase_of(ref_spec, tb, 0, scenario.events)
    nco_phase0 = (ref_phase0 + osc.initial_phase_rad - shift) % (2 * math.pi)
    loop = PhaseLockedLoop(cfg, tb, nco_phase0, osc.nominal_frequency_hz)
    closed = scenario.pll is not None
    zcd = ZeroCrossingDetector(scenario.zcd.band, tb, scenario.zcd.smoothing)
    deadline = int(math.floor(scenario.zcd.timeout_s * fs))

    inv = scenario.inverter
    if inv is not None:
        flt = output_filter(tb, inv.filter_cutoff_hz)
        feedback_gain = 1.0 / (inv.modulation_index * inv.dc_bus_volts)
        t_cmp = inv.comparator_times(tb, n).tolist()

    cols = {c: [0.0] * n for c in CHANNELS}
    v_out_c, zhz_c, pv_c, det_c = cols["v_out"], cols["zcd_hz"], cols["pv"], cols["detector"]
    u_c, fcmd_c, ph_c, lk_c, cl_c = cols["u"], cols["f_cmd"], cols["nco_phase"], cols["locked"], cols["clamp"]
    sw_c, io_c = cols["switching"], cols["inverter_out"]
    nan = math.nan
    f_est = None
    i = 0
    try:
        for i, x in enumerate(ref.tolist()):
            est = zcd.step(x)
            if est is not None:
                f_est = est.hz
                if closed:
                    loop.set_frequency(f_est)
            elif f_est is None and i >= deadline:
                raise NoCrossingError(
                    f"no frequency estimate within zcd.timeout_s = {scenario.zcd.timeout_s} s"
                )
            ph_c[i] = loop.nco.phase
            fb = None
            if inv is not None:
                level = spwm_step(inv, loop.output_sample(), t_cmp[i])
                y = flt.step(level)
                sw_c[i] = level
                io_c[i] = y
                fb = y * feedback_gain
            if closed and f_est is not None:
                v_out_c[i] = loop.step(x, fb)
                det_c[i] = loop.detector_output
                u_c[i] = loop.control
                lk_c[i] = 1.0 if loop.locked else 0.0
                cl_c[i] = 1.0 if loop.clamp_engaged else 0.0
            else:
                f_run = f_est if f_est is not None else osc.nominal_frequency_hz
                v = loop.free_run(f_run)
                v_out_c[i] = v if fb is None else fb
                det_c[i] = x * v_out_c[i]
            pv_c[i] = loop.last_error_signal if closed else nan
            fcmd_c[i] = loop.f_cmd
            zhz_c[i] = f_est if f_est is not None else nan
    except GridSyncError as exc:
        raise ScenarioFailure(f"{scenario.name}: {type(exc).__name__}: {exc}", i * dt) from exc

    full = {c: np.asarray(v, dtype=float) for c, v in cols.items()}
    full["v_ref"] = ref
    time_s = tb.times(n)
    metrics = _metrics(scenario, ref_spec, time_s, full)
    traces = Traces(time_s, {c: full[c] for c in scenario.record})
    return RunResult(scenario, metrics, traces, full)


def _metrics(scenario: Scenario, ref_spec: SignalSpec, time_s: np.ndarray, full: dict) -> Metrics:
    tb = scenario.timebase
    n = len(time_s)
    f_true = frequency_at(ref_spec, time_s[-1], scenario.events)
    zhz = full["zcd_hz"]
    m = Metrics()
    m.zcd_settling_s = settling_time(time_s, zhz, f_true, ZCD_TOLERANCE_HZ)
    if np.isfinite(zhz[-1]):
        m.zcd_final_error_hz = float(abs(zhz[-1] - f_true))
    win = _steady_window(n, scenario, f_true)
    if win.stop - win.start >= math.ceil(2 * tb.sample_rate_hz / f_true):
        m.steady_phase_error_deg = measure_phase_error(full["v_ref"][win], full["v_out"][win], f_true, tb)
    if scenario.pll is not None:
        locked = np.flatnonzero(full["locked"] > 0)
        if len(locked):
            m.lock_time_s = float(time_s[locked[0]])
        m.pv_steady = float(np.mean(full["pv"][win]))
    if scenario.inverter is not None:
        try:
            m.spectrum_spwm = spectrum(full["inverter_out"][win], tb, f_true, 5)
        except GridSyncError:
            m.spectrum_spwm = None
    return m


def spectrum_comparison(scenario: Scenario, duration_s: float | None = None, settle_s: float = 0.1) -> SpwmComparison:
    """Open-loop SPWM vs square-wave bridge at the scenario's reference frequency."""
    cfg = scenario.inverter if scenario.inverter is not None else SpwmConfig()
    return compare_spwm_square(
        scenario.reference.frequency_hz, cfg, scenario.timebase,
        duration_s if duration_s is not None else scenario.duration_s, settle_s,
    )


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepRow:
    frequency_hz: float
    metrics: Metrics | None
    error: str | None = None


def sweep_frequencies(f_start: float, f_end: float, step: float) -> list[float]:
    if not step > 0:
        raise ConfigError("sweep step must be positive")
    count = int(math.floor((f_end - f_start) / step + 1e-9)) + 1
    return [round(f_start + k * step, 10) for k in range(count)]


def _sweep_row(args) -> SweepRow:
    template, f = args
    try:
        res = run_scenario(template.with_overrides(frequency_hz=f))
        return SweepRow(f, res.metrics)
    except GridSyncError as exc:
        return SweepRow(f, None, str(exc))


def sweep(f_start: float, f_end: float, step: float, template: Scenario, workers: int = 1) -> list[SweepRow]:
    """Run ``template`` once per frequency; rows keep frequency order."""
    nyq = template.timebase.nyquist_hz
    if not 0 < f_start < f_end < nyq / 2:
        raise ConfigError(f"need 0 < f_start < f_end < Nyquist/2 = {nyq / 2}")
    freqs = sweep_frequencies(f_start, f_end, step)
    jobs = [(template, f) for f in freqs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_row, jobs))
    return [_sweep_row(j) for j in jobs]


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _open_for_write(path):
    path = Path(path)
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(traces: Traces, path) -> None:
    """``time_s,<channel>...`` with shortest round-trip float text."""
    names = list(traces.channels)
    cols = [traces.time_s.tolist()] + [traces.channels[c].tolist() for c in names]
    with _open_for_write(path) as fh:
        fh.write(",".join(["time_s"] + names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(map(repr, row)) + "\n")


def read_csv(path) -> Traces:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2) if header else None
    if data is None or data.size == 0:
        data = np.zeros((0, len(header)))
    return Traces(data[:, 0].copy(), {h: data[:, j].copy() for j, h in enumerate(header[1:], start=1)})


def emit_report(metrics: Metrics, path, extra: dict | None = None) -> None:
    """Flat ``key=value`` text, one metric per line."""
    items = list((extra or {}).items()) + metrics.as_items()
    with _open_for_write(path) as fh:
        for k, v in items:
            fh.write(f"{k}={_fmt(v)}\n")


def emit_sweep_csv(rows: list[SweepRow], path) -> None:
    keys = ["zcd_settling_s", "zcd_final_error_hz", "lock_time_s", "steady_phase_error_deg", "pv_steady"]
    with _open_for_write(path) as fh:
        fh.write(",".join(["frequency_hz"] + keys + ["error"]) + "\n")
        for r in rows:
            vals = [getattr(r.metrics, k) if r.metrics else None for k in keys]
            err = "" if r.error is None else r.error.replace(",", ";").replace("\n", " ")
            fh.write(",".join([repr(float(r.frequency_hz))] + [_fmt(v) for v in vals] + [err]) + "\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
