"""
Shared flag handling and error translation for the command modules
"""

import argparse
import functools
from typing import Any, Callable, Dict

from ..config import NetworkConfig, build_config, load_config_file
from ..errors import CapsNetError, IngestError
from ..logs import err_console, get_logger
from ..settings import get_default_seed

logger = get_logger(__name__)

Handler = Callable[[argparse.Namespace], int]


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """Flags that override values of the JSON config file"""
    parser.add_argument("--config", help="JSON network config; flags below override its values")
    parser.add_argument("--head", choices=["class", "feature"], help="Head mode (default: class)")
    parser.add_argument("--n-features", type=int, help="Number of feature capsules (feature head only)")
    parser.add_argument("--classes", type=int, help="Number of classes N_class")
    parser.add_argument("--routing-iters", type=int, help="Routing iterations r (default: 3)")
    parser.add_argument("--epochs", type=int, help="Training epochs (default: 30)")
    parser.add_argument("--batch", type=int, help="Batch size (default: 64)")
    parser.add_argument("--lr", type=float, help="Adam learning rate (default: 0.001)")
    parser.add_argument("--seed", type=int, help="Seed (can also use CAPSNET_SEED env var)")
    parser.add_argument("--float64", action="store_true", default=None, help="Run numerics in 64-bit floats")


def config_from_args(args: argparse.Namespace) -> NetworkConfig:
    """Resolve file values, flag overrides and environment defaults into a config

    Precedence: flags, then the config file, then CAPSNET_SEED, then built-in defaults.
    """
    data: Dict[str, Any] = load_config_file(args.config) if getattr(args, "config", None) else {}
    seed = args.seed
    if seed is None and "seed" not in data:
        seed = get_default_seed()
    return build_config(
        data,
        head_mode=args.head,
        n_features=args.n_features,
        n_class=args.classes,
        routing_iters=args.routing_iters,
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        seed=seed,
        float64=args.float64,
    )


def require_data_flag(args: argparse.Namespace) -> str:
    if not getattr(args, "data", None):
        raise IngestError("--data is required: an IDX directory, a manifest.csv directory or synthetic:<kind>")
    return args.data


def run_command(handler: Handler) -> Handler:
    """Translate library errors into their exit codes at the command boundary"""

    @functools.wraps(handler)
    def wrapper(args: argparse.Namespace) -> int:
        try:
            return handler(args)
        except CapsNetError as e:
            err_console.print(f"Error: {e}", markup=False, style="red")
            return e.exit_code
        except OSError as e:
            err_console.print(f"Error: {e}", markup=False, style="red")
            return 1

    return wrapper
