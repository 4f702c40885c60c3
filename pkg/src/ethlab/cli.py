"""Command-line interface.

Subcommands mirror the experiment types; each takes --config plus optional
--seed and --out overrides.  Exit codes: 0 success, 1 runtime failure,
2 configuration error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import EXPERIMENT_TYPES, ConfigError, load_config
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ethlab",
        description="Spin-chain chaos / ETH / thermalization experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENT_TYPES:
        cmd = sub.add_parser(name, help=f"run a '{name}' experiment config")
        cmd.add_argument("--config", required=True, help="configuration file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the master seed")
        cmd.add_argument("--out", default=None, help="override the output dir")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if config.experiment != args.command:
            raise ConfigError(
                f"config declares experiment type {config.experiment!r} but the "
                f"{args.command!r} subcommand was invoked")
        if args.seed is not None:
            config.master_seed = args.seed
        if args.out is not None:
            config.output_dir = Path(args.out)
    except ConfigError as err:
        print(f"ethlab: config error: {err}", file=sys.stderr)
        return 2
    try:
        manifest = run(config)
    except ConfigError as err:
        print(f"ethlab: config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - boundary: report and set exit code
        print(f"ethlab: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
