"""Command line entry point: ``gridsync {run,sweep,spectrum,lock} <scenario>``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import BUNDLED, load_scenario
from .errors import ConfigError, ScenarioFailure
from .harness import (
    emit_csv,
    emit_report,
    emit_sweep_csv,
    ensure_dir,
    run_scenario,
    spectrum_comparison,
    sweep,
)

LOCK_CHANNELS = ("v_ref", "v_out", "pv", "u", "f_cmd", "nco_phase", "locked")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help=f"scenario TOML file or bundled name ({', '.join(BUNDLED)})")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--sample-rate", type=float, help="override the sample rate in Hz")
    p.add_argument("--duration", type=float, help="override the simulated duration in s")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridsync", description="Grid-tie synchronization simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("run", help="run one scenario; writes traces.csv and metrics.txt"))
    p = sub.add_parser("sweep", help="run a scenario over a grid of reference frequencies; writes sweep.csv")
    _common(p)
    p.add_argument("--from", dest="f_from", type=float, required=True)
    p.add_argument("--to", dest="f_to", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--workers", type=int, default=1)
    _common(sub.add_parser("spectrum", help="SPWM vs square-wave bridge spectra; writes spectrum.csv and metrics.txt"))
    _common(sub.add_parser("lock", help="phase-matching run with lock telemetry"))
    return parser


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _load(args):
    sc = load_scenario(args.scenario)
    sc = sc.with_overrides(seed=args.seed, sample_rate_hz=args.sample_rate, duration_s=args.duration)
    sc.validate()
    return sc


def _cmd_run(args, sc) -> int:
    out = ensure_dir(args.out)
    res = run_scenario(sc)
    emit_csv(res.traces, out / "traces.csv")
    emit_report(res.metrics, out / "metrics.txt", {"scenario": sc.name})
    for k, v in res.metrics.as_items()[:5]:
        _say(args, f"{k:>24} = {v}")
    return 0


def _cmd_lock(args, sc) -> int:
    if sc.pll is None:
        raise ConfigError("lock needs a [pll] section in the scenario")
    record = tuple(dict.fromkeys(LOCK_CHANNELS + sc.record))
    res = run_scenario(dataclasses.replace(sc, record=record))
    out = ensure_dir(args.out)
    emit_csv(res.traces, out / "traces.csv")
    emit_report(res.metrics, out / "metrics.txt", {"scenario": sc.name})
    m = res.metrics
    if m.lock_time_s is None:
        print(f"{sc.name}: no lock within {sc.duration_s} s", file=sys.stderr)
        return 1
    _say(args, f"locked at t = {m.lock_time_s:.4f} s; steady phase error {m.steady_phase_error_deg:+.3f} deg; pv = {m.pv_steady:.5f}")
    return 0


def _cmd_sweep(args, sc) -> int:
    rows = sweep(args.f_from, args.f_to, args.step, sc, workers=args.workers)
    out = ensure_dir(args.out)
    emit_sweep_csv(rows, out / "sweep.csv")
    failed = [r for r in rows if r.error]
    for r in rows:
        if r.error:
            _say(args, f"{r.frequency_hz:10.4f} Hz  FAILED: {r.error}")
        else:
            _say(args, f"{r.frequency_hz:10.4f} Hz  zcd error {r.metrics.zcd_final_error_hz:.2e} Hz  settle {r.metrics.zcd_settling_s}")
    return 1 if failed else 0


def _cmd_spectrum(args, sc) -> int:
    cmp = spectrum_comparison(sc)
    out = ensure_dir(args.out)
    from .harness import Metrics

    m = Metrics(spectrum_spwm=cmp.spwm.filtered_spectrum, spectrum_square=cmp.square.filtered_spectrum)
    emit_report(m, out / "metrics.txt", {"scenario": sc.name, "third_harmonic_ratio": cmp.third_harmonic_ratio})
    with open(out / "spectrum.csv", "w", encoding="utf-8") as fh:
        fh.write("order,spwm_raw,spwm_filtered,square_raw,square_filtered\n")
        for k in sorted(cmp.spwm.raw_spectrum.magnitudes):
            vals = (
                cmp.spwm.raw_spectrum.magnitudes[k], cmp.spwm.filtered_spectrum.magnitudes[k],
                cmp.square.raw_spectrum.magnitudes[k], cmp.square.filtered_spectrum.magnitudes[k],
            )
            fh.write(f"{k}," + ",".join(map(repr, vals)) + "\n")
    s3 = cmp.spwm.filtered_spectrum.relative(3)
    q3 = cmp.square.filtered_spectrum.relative(3)
    _say(args, f"filtered m3/m1: spwm {s3:.5f}  square {q3:.5f}  (square/spwm = {cmp.third_harmonic_ratio:.1f}x)")
    return 0


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "spectrum": _cmd_spectrum, "lock": _cmd_lock}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = _load(args)
        return COMMANDS[args.command](args, sc)
    except ScenarioFailure as exc:
        print(f"scenario failed: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
