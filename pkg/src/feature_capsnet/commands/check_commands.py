"""
Gradient check command
"""

import argparse

from rich.table import Table

from ..errors import GradientCheckError
from ..gradient_suite import LAYER_GROUPS, run_suite
from ..logs import console
from ..settings import get_default_seed
from .shared import run_command


def register_commands(subparsers) -> None:
    """Register gradcheck with the command parser"""

    parser = subparsers.add_parser("gradcheck", help="Compare analytic gradients with central differences")
    parser.add_argument("--seed", type=int, help="Seed (can also use CAPSNET_SEED env var)")
    parser.add_argument(
        "--layer",
        action="append",
        choices=sorted(LAYER_GROUPS),
        help="Only run this check or group; repeatable",
    )
    parser.add_argument("--probes", type=int, default=20, help="Sampled entries per parameter tensor (default: 20)")
    parser.add_argument("--float64", action="store_true", help="Check in 64-bit floats with tighter tolerances")
    parser.set_defaults(handler=cmd_gradcheck)


@run_command
def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Run the finite-difference suite; exit 5 when any check fails"""
    seed = args.seed if args.seed is not None else get_default_seed()
    results = run_suite(seed=seed, layers=args.layer, float64=args.float64, probes=args.probes)

    table = Table(title=f"Gradient checks (seed {seed})", header_style="bold cyan")
    table.add_column("Check")
    table.add_column("Samples", justify="right")
    table.add_column("Redrawn", justify="right")
    table.add_column("Worst rel. error", justify="right")
    table.add_column("Worst abs. error", justify="right")
    table.add_column("Status")
    for result in results:
        table.add_row(
            result.name,
            str(result.probes),
            str(result.redrawn),
            f"{result.worst_relative_error:.3e}",
            f"{result.worst_absolute_error:.3e}",
            "[green]pass[/green]" if result.passed else "[red]FAIL[/red]",
        )
    console.print(table)

    failed = [r.name for r in results if not r.passed]
    if failed:
        raise GradientCheckError(f"Gradient checks failed: {', '.join(failed)}")
    return 0
