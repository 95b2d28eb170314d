"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 dimension cap exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import harness
from .config import StudyConfig, load_config
from .errors import ConfigError, DimensionOverflow, IoFailure, NLGibbsError

log = logging.getLogger("nlgibbs")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DIMENSION = 0, 2, 3, 4

COMMANDS = {
    "onebody": "onebody",
    "bosonic-converge": "bosonic",
    "boltzon-converge": "boltzon",
    "measure-check": "measure-check",
    "free-check": "free-check",
}


@dataclass
class SpectrumRow:
    index: int
    eigenvalue: float


def _onebody(cfg: StudyConfig):
    model = harness.build_model(cfg)
    return [SpectrumRow(j, float(v)) for j, v in enumerate(model.eigenvalues)]


RUNNERS = {
    "onebody": _onebody,
    "bosonic": harness.run_bosonic_convergence,
    "boltzon": harness.run_boltzon_convergence,
    "measure-check": harness.run_measure_check,
    "free-check": harness.run_free_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlgibbs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--max-dim", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    mode = COMMANDS[args.command]
    try:
        cfg = load_config(
            args.config,
            mode=mode,
            seed=args.seed,
            out_dir=str(args.out) if args.out else None,
            out_format=args.format,
            max_dim=args.max_dim,
            workers=args.workers,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = RUNNERS[mode](cfg)
        name = cfg.out_name or args.command
        path = Path(cfg.out_dir) / f"{name}.{cfg.out_format}"
        harness.emit_report(rows, cfg.out_format, path, cfg)
    except DimensionOverflow as exc:
        print(f"dimension cap: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except IoFailure as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NLGibbsError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
