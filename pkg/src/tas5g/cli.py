"""Command-line front end: ``tas5g plan|simulate|experiment|analyze``.

Exit codes: 0 success (and deterministic plan), 2 plan not deterministic,
1 usage or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .delay import DEFAULT_WARMUP_NS, BridgeModel, EmpiricalDistribution
from .errors import ConfigError, InfeasiblePlanError, TraceError
from .experiments import PRESETS, ExperimentPreset, get_preset
from .model import GclConfig, Link, dc_flow
from .planner import recommend
from .profiles import profile_names, profile_samples
from .sim import (
    SimConfig,
    config_problems,
    run,
    sweep,
    write_records_csv,
    write_summary_json,
)
from .trace import ProbeFormat, analyze

log = logging.getLogger("tas5g")

EXIT_OK, EXIT_ERROR, EXIT_NOT_DETERMINISTIC = 0, 1, 2
DEFAULT_P = 0.999


class CliError(Exception):
    pass


def _common_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d, help="random seed")
    p.add_argument("--out", default=d, help="output directory")
    p.add_argument("--percentile", type=float, default=d, help="percentile for planning and intervals (default 0.999)")
    p.add_argument("--warmup-ns", type=int, default=d, help="warm-up interval discarded from statistics")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tas5g", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"tas5g {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    _common_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="recommend an offset and cycle from delay samples")
    _common_flags(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", help="CSV with a delay_ns column")
    src.add_argument("--profile", help=f"builtin profile ({', '.join(profile_names()[:3])}, ...)")
    p.add_argument("--packet-size", type=int, default=200, help="frame size in bytes")
    p.add_argument("--overhead-bytes", type=int, default=0, help="bytes added on the wire")
    p.add_argument("--burst", type=int, default=29, help="packets per application cycle")
    p.add_argument("--app-cycle-ns", type=int, default=30_000_000)
    p.add_argument("--link-bps", type=float, default=1e9)
    p.add_argument("--margin-ns", type=int, default=None, help="offset margin above the percentile (default jitter/2)")
    p.add_argument("--cycle-ns", type=int, default=None, help="force this network cycle and only classify")
    p.add_argument("--max-cycle-ns", type=int, default=None)

    p = sub.add_parser("simulate", help="run one simulation from a JSON config")
    _common_flags(p, suppress=True)
    p.add_argument("config", help="SimConfig JSON, or a summary.json from an earlier run")

    p = sub.add_parser("experiment", help="run an experiment preset")
    _common_flags(p, suppress=True)
    p.add_argument("preset", help=f"one of {sorted(PRESETS)}")
    p.add_argument("--values", help="comma-separated subset of sweep values (T:W for exp3)")
    p.add_argument("--duration-ns", type=int)
    p.add_argument("--bridge-constant-ns", type=int, help="replace the bridge by a constant delay")
    p.add_argument("--sl-gated", choices=("yes", "no"), help="TAS at SL on or off")
    p.add_argument("--length-aware", choices=("yes", "no"))
    p.add_argument("--generation", choices=("batch", "continuous"))
    p.add_argument("--seed-mode", choices=("common", "derived"), default="common")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analyze", help="match MS/SL probe logs and summarize delays")
    _common_flags(p, suppress=True)
    p.add_argument("ms_csv")
    p.add_argument("sl_csv")
    p.add_argument("--format", required=True, dest="format_json", help="JSON {seq_column, time_column, time_unit}")
    p.add_argument("--gcl", dest="gcl_json", help="SL GclConfig JSON (enables windows.csv)")
    p.add_argument("--offset-ns", type=int, default=0)
    p.add_argument("--cdf-points", type=int, default=1000)
    return ap


def _percentile(args) -> float:
    p = getattr(args, "percentile", None)
    return DEFAULT_P if p is None else p


def _out_dir(args, default: str) -> Path:
    out = Path(getattr(args, "out", None) or default)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create {out}: {e}") from None
    return out


def cmd_plan(args) -> int:
    if args.samples:
        try:
            dist = EmpiricalDistribution.from_csv(args.samples)
        except OSError as e:
            raise CliError(f"cannot read {args.samples}: {e}") from None
        source = {"samples": args.samples}
    else:
        dist = EmpiricalDistribution(profile_samples(args.profile))
        source = {"profile": args.profile}
    flow = dc_flow(args.packet_size, args.app_cycle_ns, args.burst, overhead_bytes=args.overhead_bytes)
    link = Link("MS", "NW-TT", args.link_bps)
    p = _percentile(args)
    inputs = dict(source, flow=flow.to_dict(), link_bps=args.link_bps, percentile=p, margin_ns=args.margin_ns,
                  cycle_ns=args.cycle_ns, max_cycle_ns=args.max_cycle_ns, version=__version__)
    try:
        plan = recommend(dist, flow, link, p, args.margin_ns, args.max_cycle_ns, args.cycle_ns)
    except InfeasiblePlanError as e:
        doc = {"error": str(e), "violated_condition": e.condition, "inputs": inputs}
        print(json.dumps(doc, indent=2))
        _maybe_write(args, "plan.json", doc)
        return EXIT_NOT_DETERMINISTIC
    doc = plan.to_dict()
    doc["inputs"] = inputs
    print(json.dumps(doc, indent=2))
    _maybe_write(args, "plan.json", doc)
    return EXIT_OK if plan.scenario.deterministic else EXIT_NOT_DETERMINISTIC


def _maybe_write(args, name, doc):
    if getattr(args, "out", None):
        (_out_dir(args, args.out) / name).write_text(json.dumps(doc, indent=2))


def _load_sim_config(path, args) -> SimConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CliError(f"cannot read {path}: {e}") from None
    if isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "warmup_ns", None) is not None:
        doc["warmup_ns"] = args.warmup_ns
    problems = config_problems(doc, base_dir=path.parent)
    if problems:
        raise CliError("invalid config:\n" + "\n".join(f"  - {m}" for m in problems))
    return SimConfig.from_dict(doc, base_dir=path.parent)


def _verdict(result, p) -> str:
    pred = result.predicted_scenario(p)
    hist = result.window_histogram
    observed = "single window" if len(hist) == 1 else f"{len(hist)} windows"
    shares = ", ".join(f"{i}: {s.probability:.4f}" for i, s in hist.items())
    pred_s = "n/a (SL gate open)" if pred is None else pred.value
    return f"predicted {pred_s}; observed {observed} ({shares}); drops {result.drops}"


def cmd_simulate(args) -> int:
    cfg = _load_sim_config(args.config, args)
    out = _out_dir(args, "sim_out")
    result = run(cfg)
    p = _percentile(args)
    write_records_csv(result, out / "records.csv")
    write_summary_json(result, out / "summary.json", p)
    print(_verdict(result, p))
    return EXIT_OK


def _parse_values(preset: ExperimentPreset, text: str):
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            vals.append(tuple(int(float(x)) for x in tok.split(":")))
        else:
            vals.append(int(float(tok)))
    if not vals:
        raise CliError("--values is empty")
    return vals


def cmd_experiment(args) -> int:
    try:
        preset = get_preset(args.preset)
    except ConfigError as e:
        raise CliError(str(e)) from None
    overrides = {
        "seed": getattr(args, "seed", None),
        "warmup_ns": getattr(args, "warmup_ns", None),
        "duration_ns": args.duration_ns,
        "sl_gated": None if args.sl_gated is None else args.sl_gated == "yes",
        "length_aware": None if args.length_aware is None else args.length_aware == "yes",
        "generation": args.generation,
        "bridge_override": None if args.bridge_constant_ns is None else BridgeModel.constant(args.bridge_constant_ns),
    }
    base = preset.base_config(**overrides)
    values = _parse_values(preset, args.values) if args.values else list(preset.values)
    calibration = None
    if preset.calibration is not None and args.bridge_constant_ns is None:
        calibration = preset.calibration()
    elif preset.axis == "be_load":
        calibration = {v: base.bridge for v in values}
    out = _out_dir(args, f"exp_{preset.name}")
    p = _percentile(args)
    results = sweep(base, preset.axis, values, args.seed_mode, calibration, args.workers)
    rows = []
    for i, (v, res) in enumerate(results):
        d = out / f"point_{i:02d}"
        d.mkdir(exist_ok=True)
        write_records_csv(res, d / "records.csv")
        write_summary_json(res, d / "summary.json", p, extra={"preset": preset.name, "axis": preset.axis, "value": preset.label(v)})
        dist = res.delays
        pred = res.predicted_scenario(p)
        rows.append({
            "value": preset.label(v),
            "p50_ns": "" if dist is None else dist.percentile(0.5),
            "p99.9_ns": "" if dist is None else dist.percentile(0.999),
            "min_ns": "" if dist is None else dist.min,
            "max_ns": "" if dist is None else dist.max,
            "window0_probability": res.window_histogram[0].probability if 0 in res.window_histogram else 0.0,
            "scenario": "n/a" if pred is None else pred.value,
        })
        print(f"{preset.axis}={preset.label(v)}: {_verdict(res, p)}")
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    summary = {
        "version": __version__,
        "preset": preset.name,
        "axis": preset.axis,
        "values": [preset.label(v) for v in values],
        "seed_mode": args.seed_mode,
        "overrides": {k: (v.to_dict() if isinstance(v, BridgeModel) else v) for k, v in overrides.items() if v is not None},
        "base_config": base.to_dict(),
        "rows": rows,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        fmt = ProbeFormat.load(args.format_json)
        gcl = GclConfig.from_json(Path(args.gcl_json).read_text()) if args.gcl_json else None
    except OSError as e:
        raise CliError(str(e)) from None
    warmup = args.warmup_ns if getattr(args, "warmup_ns", None) is not None else DEFAULT_WARMUP_NS
    p = _percentile(args)
    p_list = sorted({0.5, 0.99, 0.999, p})
    out = _out_dir(args, "analysis")
    summary = analyze(args.ms_csv, args.sl_csv, fmt, gcl, args.offset_ns, out, warmup, p_list, args.cdf_points)
    print(f"{summary['count']} pairs; min {summary['min']} ns, p{p} {summary['percentiles'][str(p)]} ns, "
          f"max {summary['max']} ns; unmatched MS {summary['unmatched_ms']}, SL {summary['unmatched_sl']}")
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "simulate": cmd_simulate, "experiment": cmd_experiment, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    p = _percentile(args)
    if not 0 <= p < 1:
        print("error: --percentile must be in [0, 1)", file=sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (CliError, ConfigError, TraceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
