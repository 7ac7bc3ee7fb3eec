"""Command line entry point: ``qpi-sim <command> --config <path>``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .experiments import COMMANDS, ConfigError, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpi-sim", description="Simulated quantum policy iteration experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--seeds", help="comma-separated seeds, overriding the config")
    return parser


def _seed_list(text: str) -> list:
    seeds = [int(s) for s in text.split(",") if s.strip()]
    if not seeds:
        raise ValueError("empty seed list")
    return seeds


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        if args.seeds is not None:
            try:
                cfg = cfg.with_seeds(_seed_list(args.seeds))
            except ValueError as exc:
                raise ConfigError("seeds", str(exc)) from None
    except ConfigError as exc:
        print(f"error: config: {exc.key}: {exc.message}", file=sys.stderr)
        return 2
    status, rows = run_experiment(cfg, args.out)
    agg = rows[-1]
    print(" ".join(f"{k}={v}" for k, v in agg.items() if v is not None))
    return status


if __name__ == "__main__":
    sys.exit(main())
