"""Command line: ``aisdsr run`` for one world, ``aisdsr sweep`` for a pause-time sweep.

Exit status is 0 on success, 1 if any simulation run aborted and 2 for
configuration or usage errors.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

from .config import VARIANTS, ConfigError, apply_overrides, load_scenario
from .engine import SimulationFault
from .sweep import DETAIL_COLUMNS, SUMMARY_COLUMNS, SweepError, SweepSpec, any_failed, run_sweep, summarize, to_csv
from .world import Traces, World

TRACE_KINDS = ("events", "packets", "defense", "mobility")
EXIT_OK, EXIT_FAULT, EXIT_CONFIG = 0, 1, 2


def _float_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty value list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aisdsr", description="DSR / AIS-DSR black-hole simulations")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario file (INI sections)")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a scenario key; repeatable")

    run = sub.add_parser("run", parents=[common], help="run one scenario")
    run.add_argument("--seed", type=int)
    run.add_argument("--variant", choices=VARIANTS)
    run.add_argument("--trace", action="append", choices=TRACE_KINDS, default=[],
                     help="write <kind>.jsonl; repeatable")

    sw = sub.add_parser("sweep", parents=[common], help="sweep pause times across seeds and variants")
    sw.add_argument("--pause-times", type=_float_list, required=True, metavar="A,B,C")
    sw.add_argument("--seeds", type=int, required=True, help="seeds per point, numbered from --first-seed")
    sw.add_argument("--first-seed", type=int, default=1)
    sw.add_argument("--variants", default=",".join(VARIANTS), help="comma-separated variant list")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    return p


def _config(args):
    cfg = load_scenario(args.scenario)
    cfg = apply_overrides(cfg, args.overrides)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "variant", None) is not None:
        changes["variant"] = args.variant
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with contextlib.ExitStack() as stack:
        streams = {k: stack.enter_context(open(out / f"{k}.jsonl", "w")) for k in args.trace}
        world = World(cfg, Traces(**streams))
        try:
            report = world.run()
        except SimulationFault as exc:
            print(f"run aborted: {exc}", file=sys.stderr)
            for line in exc.tail:
                print(f"  {line}", file=sys.stderr)
            return EXIT_FAULT
    (out / "report.txt").write_text(report.to_text())
    (out / "detail.csv").write_text(report.to_csv_row())
    print(report.to_text(), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _config(args)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    spec = SweepSpec(values=args.pause_times, seeds=args.seeds, variants=variants, first_seed=args.first_seed)
    if args.jobs < 1:
        raise SweepError("--jobs must be >= 1")
    rows = run_sweep(spec, base, jobs=args.jobs)
    summary = summarize(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "detail.csv").write_text(to_csv(rows, DETAIL_COLUMNS))
    summary_text = to_csv(summary, SUMMARY_COLUMNS)
    (out / "summary.csv").write_text(summary_text)
    (out / "report.txt").write_text(summary_text)
    print(summary_text, end="")
    for r in rows:
        if r["errors"]:
            print(f"run failed: {r['variant']} pause={r['pause_time']} seed={r['seed']}: {r['errors']}",
                  file=sys.stderr)
    return EXIT_FAULT if any_failed(rows) else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except (ConfigError, SweepError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"run aborted: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
