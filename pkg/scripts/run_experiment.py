#!/usr/bin/env python3
"""
Run a netlqr experiment from a YAML config.

Subcommands select the pipeline:
- decompose:  spectral summary, assumption report, decomposition of x(0)
- synthesize: decomposed gains (gains.csv)
- simulate:   closed/open/mixed loop simulation, Monte Carlo when F != 0 and --paths > 0
- verify:     simulate and compare with the centralized Riccati oracle
- consensus:  optimal consensus protocol and its disagreement trace
- bench:      Kronecker sweep of decomposed vs. centralized solve times

Example:
   netlqr verify --config configs/scalar_network.yaml --out runs/scalar_network

Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 verification gap exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Sequence

from netlqr.config import ExperimentConfig, config_from_dict, parse_config
from netlqr.core import run
from netlqr.exceptions import NetlqrError
from netlqr.types import RunMode

logger = logging.getLogger("netlqr.cli")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# ---------------------------------------------------------------------------
# Arguments
# ---------------------------------------------------------------------------

def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="netlqr",
        description="Spectral-decomposition LQR for networks of coupled subsystems.",
    )
    parser.add_argument(
        "mode",
        choices=[m.value for m in RunMode],
        help="Pipeline to run",
    )
    parser.add_argument("--config", required=True, help="Path to the YAML experiment config")
    parser.add_argument("--out", default=None, help="Output directory (default: output.dir from the config)")
    parser.add_argument("--seed", type=int, default=None, help="Monte Carlo root seed")
    parser.add_argument("--paths", type=int, default=None, help="Number of Monte Carlo paths")
    parser.add_argument("--svg", action="store_true", help="Also write SVG line plots")
    parser.add_argument("--tol", type=float, default=None, help="Relative cost gap accepted by verify")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress (INFO)")
    parser.add_argument("--debug", action="store_true", help="Log solver details (DEBUG)")
    return parser.parse_args(argv)


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Fold command-line flags into the config and validate the result again."""
    data: dict[str, Any] = config.model_dump(mode="json")
    data["mode"] = args.mode
    if args.seed is not None:
        data["monte_carlo"]["seed"] = args.seed
    if args.paths is not None:
        data["monte_carlo"]["n_paths"] = args.paths
    if args.svg:
        data["output"]["svg"] = True
    if args.tol is not None:
        data["verify_tol"] = args.tol
    if args.out is not None:
        data["output"]["dir"] = args.out
    return config_from_dict(data, "command line")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def main(argv: Sequence[str] | None = None) -> None:
    args = parse_args(argv)
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        config = apply_overrides(parse_config(args.config), args)
        report = run(config)
    except NetlqrError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        raise SystemExit(exc.exit_code)

    print(report.model_dump_json(indent=2))
    raise SystemExit(report.exit_code)


if __name__ == "__main__":
    main()
