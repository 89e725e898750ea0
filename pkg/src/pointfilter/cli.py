"""Command-line front end: ``synth``, ``sweep``, ``filter`` and ``eval``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

from . import harness
from .neural import load_model, save_model
from .simulator import generate


def _common(p, frames=True):
    p.add_argument("--config", help="JSON file with optional 'filter' and 'scenario' sections")
    p.add_argument("--seed", type=int, help="scenario and network seed")
    p.add_argument("--lambda-c", type=float, help="mean clutter count per frame")
    if frames:
        p.add_argument("--frames", type=int, help="truncate the scenario to this many frames")
    p.add_argument("--out", help="report path (default: stdout summary only)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--no-timing", action="store_true",
                   help="record elapsed_ms as 0 so reports are byte-reproducible")


def _model_flags(p):
    p.add_argument("--load-model", help="start from a saved network checkpoint")
    p.add_argument("--save-model", help="write the final network checkpoint here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pointfilter", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="run the filter on a generated scenario")
    _common(p)
    _model_flags(p)
    p.add_argument("--measurements-out", help="also write the generated measurements (CSV)")
    p.add_argument("--truth-out", help="also write the ground truth (CSV)")
    p.add_argument("--estimates-out", help="write per-frame estimates (CSV time_step,x,y)")

    p = sub.add_parser("sweep", help="repeat synthetic runs over clutter rates")
    _common(p)
    p.add_argument("--lambdas", default=",".join(f"{v:g}" for v in harness.DEFAULT_SWEEP),
                   help="comma-separated clutter rates")
    p.add_argument("--repeats", type=int, default=1)

    p = sub.add_parser("filter", help="filter a measurement file")
    p.add_argument("--input", required=True, help="CSV with header time_step,x,y")
    p.add_argument("--truth", help="CSV with header time_step,track_label,x,y")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, help="network seed")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--no-timing", action="store_true")
    p.add_argument("--estimates", help="write per-frame estimates (CSV time_step,x,y)")
    _model_flags(p)

    p = sub.add_parser("eval", help="score an estimate file against a truth file")
    p.add_argument("--truth", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("-p", type=float, default=1.0, help="OSPA order")
    p.add_argument("-c", type=float, default=100.0, help="OSPA cutoff")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    return ap


def _configs(args):
    cfg, spec = harness.load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
        spec = replace(spec, seed=args.seed)
    if getattr(args, "lambda_c", None) is not None:
        spec = replace(spec, lambda_c=args.lambda_c)
    if getattr(args, "frames", None) is not None:
        spec = harness.truncate_scenario(spec, args.frames)
    return cfg, spec


def _warm_start(args):
    if not args.load_model:
        return None, None
    return load_model(args.load_model)


def _finish(report, args):
    if args.out:
        harness.emit(report, args.out, args.format)
    avg = report.averages
    if avg["ospa"] is None:
        print(f"frames={len(report.records)} (no truth, OSPA not computed)")
    else:
        print(f"frames={len(report.records)} ospa={avg['ospa']:.4f} loc={avg['loc']:.4f} "
              f"card={avg['card']:.4f}")


def cmd_synth(args):
    cfg, spec = _configs(args)
    model, opt = _warm_start(args)
    if args.measurements_out or args.truth_out:
        truth, frames = generate(spec)
        if args.measurements_out:
            harness.write_measurements(frames, args.measurements_out)
        if args.truth_out:
            harness.write_truth(truth, args.truth_out)
    report = harness.run_synthetic(cfg, spec, timing=not args.no_timing, model=model, opt=opt)
    if args.estimates_out:
        harness.write_estimates(report, args.estimates_out)
    if args.save_model:
        save_model(args.save_model, *report.model)
    _finish(report, args)


def cmd_sweep(args):
    cfg, spec = _configs(args)
    lambdas = [float(v) for v in args.lambdas.split(",") if v.strip()]
    reports = harness.run_sweep(cfg, spec, lambdas, args.repeats, timing=not args.no_timing)
    rows = [{"lambda_c": r.config["scenario"]["lambda_c"], "seed": r.seed, **r.averages}
            for r in reports]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            if args.format == "csv":
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
            else:
                for row in rows:
                    fh.write(json.dumps(row) + "\n")
    summary = harness.sweep_summary(reports)
    for lam, v in summary["mean_ospa"].items():
        print(f"lambda_c={lam:g} mean_ospa={v:.4f}")
    print(f"spearman={summary['spearman']:.4f}")


def cmd_filter(args):
    cfg, _ = harness.load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    frames = harness.ingest_measurements(args.input)
    truth = harness.ingest_truth(args.truth) if args.truth else None
    model, opt = _warm_start(args)
    report = harness.run_filter(frames, cfg, truth, timing=not args.no_timing, model=model, opt=opt)
    if args.estimates:
        harness.write_estimates(report, args.estimates)
    if args.save_model:
        save_model(args.save_model, *report.model)
    _finish(report, args)


def cmd_eval(args):
    report = harness.evaluate_files(args.truth, args.est, args.p, args.c)
    _finish(report, args)


COMMANDS = {"synth": cmd_synth, "sweep": cmd_sweep, "filter": cmd_filter, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"pointfilter: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
