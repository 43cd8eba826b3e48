"""Command line entry point: ``mqm run | list-scenarios | validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SCENARIOS, ConfigError, load_config, parse_config
from .core import NumericalGuardError
from .scenarios import run_scenario

EXIT_OK, EXIT_GUARD, EXIT_USAGE = 0, 1, 2


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _threads(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mqm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the scenario described by a YAML config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--seed", type=_seed, help="RNG seed (overrides the config)")
    run.add_argument("--threads", type=_threads, help="worker threads for Monte Carlo paths")
    sub.add_parser("list-scenarios", help="print the available scenarios")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.add_argument("--seed", type=_seed)
    val.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list-scenarios":
        for name, text in SCENARIOS.items():
            print(f"{name:<18} {text}")
        return EXIT_OK

    try:
        cfg = parse_config(load_config(args.config), seed=args.seed, out=args.out)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "validate":
        print(f"{args.config}: ok (scenario {cfg.scenario})")
        return EXIT_OK

    try:
        summary, writer = run_scenario(cfg, threads=args.threads)
    except PermissionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalGuardError as exc:
        print(f"numerical guard tripped: {exc.guard}: {exc}", file=sys.stderr)
        return EXIT_GUARD
    print(f"{cfg.scenario}: wrote {len(writer.files)} files to {writer.out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
