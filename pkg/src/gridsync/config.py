"""TOML scenario files.

Layout (every section optional except where noted)::

    name = "fig5_lock_start"
    duration_s = 2.0
    seed = 0
    record = ["v_ref", "v_out", "pv"]
    steady_window_s = 0.1

    [timebase]            sample_rate_hz
    [reference]           amplitude, frequency_hz, phase_rad, dc_offset, noise_std, noise_clip
    [[reference.harmonics]]  order, relative_amplitude, phase_rad
    [[reference.events]]     at_time_s, new_frequency_hz, phase_jump_rad
    [zcd]                 positive_level, negative_level, smoothing, timeout_s
    [oscillator]          nominal_frequency_hz, initial_phase_rad
    [pll]                 phase_shift_rad, detector_mode, lock_band, lock_dwell_s, ...
    [pll.loop_filter]     kind, cutoff_hz, period_average
    [pll.pid]             kp, ki, kd, out_min, out_max, anti_windup
    [inverter]            carrier_hz, modulation_index, dc_bus_volts, scheme, ...

Omitting ``[pll]`` runs frequency matching only; adding ``[inverter]``
puts the SPWM bridge in the loop.  Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import sys
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .harness import OscillatorSpec, Scenario, ZcdSpec
from .inverter import SpwmConfig
from .pll import LoopFilterSpec, PidSpec, PllConfig
from .signals import Harmonic, SignalSpec, StepEvent, TimeBase

BUNDLED = ("fig2_freq50", "fig3_freq42p88", "fig5_lock_start", "fig6_locked", "spwm_vs_square")


def _flat(cls, table, where: str, skip=()):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    names = {f.name for f in dataclasses.fields(cls)} - set(skip)
    unknown = sorted(set(table) - names - set(skip))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    return {k: v for k, v in table.items() if k in names}


def _make(cls, table, where, skip=()):
    try:
        return cls(**_flat(cls, table, where, skip))
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def scenario_from_dict(d: dict) -> Scenario:
    if "events" in d:
        raise ConfigError("step events belong under [[reference.events]]")
    top = _flat(Scenario, d, "scenario")
    kw = {k: top[k] for k in ("name", "duration_s", "seed", "steady_window_s") if k in top}
    if "record" in top:
        kw["record"] = tuple(top["record"])
    if "timebase" in top:
        kw["timebase"] = _make(TimeBase, top["timebase"], "timebase")

    ref = dict(top.get("reference", {}))
    harmonics = ref.pop("harmonics", [])
    events = ref.pop("events", [])
    if "seed" in ref:
        raise ConfigError("set the noise seed with the top-level 'seed' key, not [reference].seed")
    ref_kw = _flat(SignalSpec, ref, "reference", skip=("harmonics", "seed"))
    ref_kw["harmonics"] = tuple(_make(Harmonic, h, "reference.harmonics") for h in harmonics)
    kw["reference"] = SignalSpec(**ref_kw)
    kw["events"] = tuple(_make(StepEvent, e, "reference.events") for e in events)

    if "zcd" in top:
        kw["zcd"] = _make(ZcdSpec, top["zcd"], "zcd")
    if "oscillator" in top:
        kw["oscillator"] = _make(OscillatorSpec, top["oscillator"], "oscillator")
    if "pll" in top:
        p = dict(top["pll"])
        lf = p.pop("loop_filter", {})
        pid = p.pop("pid", {})
        p_kw = _flat(PllConfig, p, "pll", skip=("loop_filter", "pid"))
        kw["pll"] = PllConfig(
            loop_filter=_make(LoopFilterSpec, lf, "pll.loop_filter"),
            pid=_make(PidSpec, pid, "pll.pid"),
            **p_kw,
        )
    else:
        kw["pll"] = None
    if "inverter" in top:
        kw["inverter"] = _make(SpwmConfig, top["inverter"], "inverter")
    scenario = Scenario(**kw)
    scenario.validate()
    return scenario


def load_scenario(source) -> Scenario:
    """Load from a file path, or from a bundled scenario name such as ``fig2_freq50``."""
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    elif str(source) in BUNDLED:
        text = resources.files("gridsync.scenarios").joinpath(f"{source}.toml").read_text(encoding="utf-8")
    else:
        raise ConfigError(f"no scenario file {source!r} (bundled: {', '.join(BUNDLED)})")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return scenario_from_dict(data)
