"""Command line entry point.

Exit codes: 0 success, 1 comparison failure, 2 configuration error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import PRESETS, ConfigError, ExperimentConfig, load_config, merge
from .coverage import QuadratureError
from .experiments import compare, format_report, render, run, run_beam_table

log = logging.getLogger("beamcov")

EXIT_OK, EXIT_COMPARE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser, with_preset: bool = False) -> None:
    p.add_argument("--config", help="JSON config file (default: $BEAMCOV_CONFIG)")
    if with_preset:
        p.add_argument("--preset", choices=PRESETS, help="figure preset to start from")
    p.add_argument("--seed", type=int, help="base seed of the Monte Carlo drops")
    p.add_argument("--drops", type=int, help="number of Monte Carlo drops")
    p.add_argument("--range-mode", choices=["paper", "friis"], help="reflected range rule")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], help="output format")


def _point(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam", nargs=2, type=float, metavar=("THETA_DEG", "MU_DEG"))
    p.add_argument("--user", nargs=2, type=float, metavar=("THETA_DEG", "D_M"))
    p.add_argument("--lam", type=float, help="building density (1/m^2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamcov", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="analytic coverage for one beam/user point")
    _common(p)
    _point(p)
    p = sub.add_parser("simulate", help="analytic and Monte Carlo coverage for one point")
    _common(p)
    _point(p)
    p = sub.add_parser("sweep", help="run a figure sweep")
    _common(p, with_preset=True)
    p = sub.add_parser("compare", help="check analytic vs Monte Carlo agreement")
    _common(p, with_preset=True)
    _point(p)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config, getattr(args, "preset", None))
    over: dict = {"sim": {}, "outputs": {}}
    if args.seed is not None:
        over["sim"]["base_seed"] = args.seed
    if args.drops is not None:
        over["sim"]["n_drops"] = args.drops
    if args.range_mode is not None:
        over["sim"]["range_mode"] = args.range_mode
    if args.workers is not None:
        over["sim"]["workers"] = args.workers
    if args.out is not None:
        over["outputs"]["path"] = args.out
    if args.format is not None:
        over["outputs"]["format"] = args.format
    if getattr(args, "beam", None):
        over["beams"] = {"list_deg": [list(args.beam)], "n": None}
    if getattr(args, "user", None):
        over["users"] = {"list_deg": [list(args.user)]}
    if getattr(args, "lam", None) is not None:
        over["env"] = {"lam": args.lam, "lam_sweep": None}
    return ExperimentConfig.from_dict(merge(cfg.to_dict(), over))


def _emit(text: str, cfg: ExperimentConfig) -> None:
    if cfg.outputs.path:
        Path(cfg.outputs.path).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "analytic":
            rows = run_beam_table(dataclasses.replace(cfg, kind="beams"), simulate=False)
            _emit(render(rows, cfg.outputs.format), cfg)
        elif args.command == "simulate":
            rows = run_beam_table(dataclasses.replace(cfg, kind="beams"))
            _emit(render(rows, cfg.outputs.format), cfg)
        elif args.command == "sweep":
            _emit(render(run(cfg), cfg.outputs.format), cfg)
        else:
            verdicts, ok = compare(cfg)
            print(format_report(verdicts))
            n_bad = sum(not v.passed for v in verdicts)
            print(f"{len(verdicts) - n_bad}/{len(verdicts)} rows within tolerance")
            if cfg.outputs.path:
                _emit(render([v.row for v in verdicts], cfg.outputs.format), cfg)
            return EXIT_OK if ok else EXIT_COMPARE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
