"""
Cost accounting and benchmark sweep commands
"""

import argparse
import json

from rich.table import Table

from ..bench import account, build_tables, emit_report, load_sweep_file, max_batch, measure
from ..errors import SweepError, UsageError
from ..logs import console, get_logger
from ..settings import get_default_budget, get_default_out_dir
from .shared import add_config_flags, config_from_args, run_command

logger = get_logger(__name__)


def register_commands(subparsers) -> None:
    """Register bench and account with the command parser"""

    bench_parser = subparsers.add_parser("bench", help="Run a timing sweep and write the cost tables")
    bench_parser.add_argument("--sweep", required=True, help="JSON sweep spec")
    bench_parser.add_argument("--budget", type=int, help="Memory budget in bytes (can also use CAPSNET_BUDGET_BYTES)")
    bench_parser.add_argument("--out", help="Report directory (can also use CAPSNET_OUT_DIR env var)")
    bench_parser.add_argument("--workers", type=int, help="Worker processes (can also use CAPSNET_WORKERS env var)")
    bench_parser.set_defaults(handler=cmd_bench)

    account_parser = subparsers.add_parser("account", help="Print closed-form parameter, memory and FLOP counts")
    add_config_flags(account_parser)
    account_parser.add_argument("--budget", type=int, help="Memory budget in bytes for the max batch line")
    account_parser.add_argument("--json", action="store_true", help="Print the cost report as JSON")
    account_parser.set_defaults(handler=cmd_account)


@run_command
def cmd_bench(args: argparse.Namespace) -> int:
    """Run the sweep; missing cells are reported, a sweep with no finished cell fails"""
    sweep = load_sweep_file(args.sweep, budget_bytes=args.budget, workers=args.workers)
    result = measure(sweep)
    if result.completed == 0:
        raise SweepError(f"All {len(result.cells)} sweep cells failed; first error: {result.cells[0].error}")

    tables = build_tables(result)
    metadata = {
        "sweep": sweep.model_dump(),
        "cells": [cell.to_dict() for cell in result.cells],
    }
    written = emit_report(tables, args.out or get_default_out_dir(), metadata=metadata)
    for table in tables:
        console.print(table.render())

    missing = len(result.cells) - result.completed
    if missing:
        logger.warning(f"{missing} of {len(result.cells)} cells are missing from the report")
    console.print(f"Wrote {len(written)} report files to {written[-1].parent}")
    return 0


@run_command
def cmd_account(args: argparse.Namespace) -> int:
    """Print the per-layer cost report of one config"""
    config = config_from_args(args)
    report = account(config)
    budget = args.budget if args.budget is not None else get_default_budget()
    try:
        batch = max_batch(report, budget)
    except UsageError as e:
        logger.warning(str(e))
        batch = None

    if args.json:
        payload = {**report.to_dict(), "fc_mib": report.fc_mib, "budget_bytes": budget, "max_batch": batch}
        console.print_json(json.dumps(payload))
        return 0

    table = Table(title=f"{config.head_mode}-mode network, N_out={config.n_out}", header_style="bold cyan")
    for column in ("Layer", "Params", "Param B", "Grad B", "Adam B", "Act B/sample", "FLOPs/sample"):
        table.add_column(column, justify="left" if column == "Layer" else "right")
    for row in report.rows:
        table.add_row(
            row.layer,
            f"{row.parameters:,}",
            f"{row.parameter_bytes:,}",
            f"{row.gradient_bytes:,}",
            f"{row.optimizer_bytes:,}",
            f"{row.activation_bytes_per_sample:,}",
            f"{row.forward_flops_per_sample:,}",
        )
    table.add_row(
        "total",
        f"{report.parameters:,}",
        f"{report.parameter_bytes:,}",
        f"{report.gradient_bytes:,}",
        f"{report.optimizer_bytes:,}",
        f"{report.activation_bytes_per_sample:,}",
        f"{report.forward_flops_per_sample:,}",
        style="bold",
    )
    console.print(table)
    console.print(f"Class head: {report.fc_bytes:,} bytes ({report.fc_mib:.4f} MiB)")
    console.print(f"Memory per sample: {report.memory_mib_per_sample:.4f} MiB")
    console.print(f"Max batch within {budget:,} bytes: {'-' if batch is None else batch}")
    return 0
