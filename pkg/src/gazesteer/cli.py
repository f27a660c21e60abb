"""Command line entry point: ``gazesteer {run,report,verify,gen-course}``."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import GazeSteerError
from .experiment import ExperimentConfig, analyze, load_config, read_metrics_csv, run_experiment
from .report import FORMATS, load_fixtures, render_report
from .world import dumps_course


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, course=dataclasses.replace(cfg.course, seed=args.seed))
    return cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_experiment(cfg, args.out)
    print(render_report(res.rows, analyze(res.rows), load_fixtures(), args.format), end="")
    print(f"wrote {res.out_dir} (config digest {res.digest[:12]})", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    rows = []
    if args.out is not None:
        path = Path(args.out) / "metrics.csv"
        try:
            rows = read_metrics_csv(path.read_text())
        except OSError as e:
            print(f"error: cannot read {path}: {e}", file=sys.stderr)
            return 2
    print(render_report(rows, analyze(rows) if rows else None, load_fixtures(), args.format), end="")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import verify

    return verify()


def cmd_gen_course(args) -> int:
    cfg = _config(args)
    text = dumps_course(cfg.course.load())
    if args.out is None:
        print(text)
    else:
        Path(args.out).write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gazesteer", description="Headless gaze-hand steering experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--seed", type=int, help="course generator seed")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--format", choices=FORMATS, default="text")

    common(sub.add_parser("run", help="run the experiment and print the report"), "results directory")
    common(sub.add_parser("report", help="render a report from a results directory"), "results directory")
    sub.add_parser("verify", help="run the acceptance checks")
    common(sub.add_parser("gen-course", help="write the generated course as JSON"), "output file (stdout if omitted)")
    return p


COMMANDS = {"run": cmd_run, "report": cmd_report, "verify": cmd_verify, "gen-course": cmd_gen_course}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except GazeSteerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
