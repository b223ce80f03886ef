#!/usr/bin/env python3
"""
CLI entry point for feature-capsnet
"""

import argparse
import os
import sys
from typing import List, Optional

# Numerics run single-threaded so repeated runs are bit-identical
THREAD_VARIABLES = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with every subcommand registered"""
    from feature_capsnet import __version__
    from feature_capsnet.commands import bench_commands, check_commands, train_commands

    parser = argparse.ArgumentParser(
        prog="feature-capsnet",
        description="Capsule networks with class-capsule or feature-capsule heads: train, evaluate, benchmark, verify",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Log level (can also use CAPSNET_LOG_LEVEL env var)")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

    train_commands.register_commands(subparsers)
    bench_commands.register_commands(subparsers)
    check_commands.register_commands(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point with argument parsing"""
    for name in THREAD_VARIABLES:
        os.environ.setdefault(name, "1")

    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    from feature_capsnet.logs import configure_logging

    configure_logging(args.log_level)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
