"""
Training and evaluation commands
"""

import argparse
import csv
from pathlib import Path

from rich.table import Table

from ..data.sources import resolve_data
from ..logs import console, get_logger
from ..settings import get_default_out_dir
from ..training import RunManifest, evaluate, load_checkpoint, save_checkpoint, train
from ..training.manifest import METRICS_FILE
from .shared import add_config_flags, config_from_args, require_data_flag, run_command

logger = get_logger(__name__)

CONFUSION_FILE = "confusion.csv"


def register_commands(subparsers) -> None:
    """Register train and eval with the command parser"""

    train_parser = subparsers.add_parser("train", help="Train a capsule network and save the best checkpoint")
    add_config_flags(train_parser)
    train_parser.add_argument("--data", help="IDX directory, manifest.csv directory or synthetic:<kind>")
    train_parser.add_argument("--out", help="Run directory (can also use CAPSNET_OUT_DIR env var)")
    train_parser.set_defaults(handler=cmd_train)

    eval_parser = subparsers.add_parser("eval", help="Evaluate a checkpoint on a test set")
    eval_parser.add_argument("--checkpoint", required=True, help="Run directory holding checkpoint.bin and manifest.json")
    eval_parser.add_argument("--data", help="IDX directory, manifest.csv directory or synthetic:<kind>")
    eval_parser.add_argument("--out", help="Directory for confusion.csv (default: the checkpoint directory)")
    eval_parser.set_defaults(handler=cmd_eval)


@run_command
def cmd_train(args: argparse.Namespace) -> int:
    """Train, then write checkpoint.bin, manifest.json and metrics.csv"""
    config = config_from_args(args)
    data = require_data_flag(args)
    train_set, _ = resolve_data(data, config)

    out_dir = Path(args.out or get_default_out_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.for_run(config, data, train_set)
    manifest.write(str(out_dir))
    logger.info(f"Training {config.head_mode}-mode network on {len(train_set)} samples, writing to {out_dir}")

    result = train(config, train_set)
    result.metrics.to_csv(str(out_dir / METRICS_FILE))
    save_checkpoint(result.checkpoint, str(out_dir), manifest=manifest.model_dump(exclude={"checkpoint"}))

    console.print(
        f"Saved epoch {result.checkpoint.epoch} checkpoint "
        f"(train accuracy {result.checkpoint.train_accuracy:.4f}) to {out_dir}"
    )
    return 0


@run_command
def cmd_eval(args: argparse.Namespace) -> int:
    """Print test accuracy and a per-class table, write the confusion matrix"""
    checkpoint = load_checkpoint(args.checkpoint)
    data = require_data_flag(args)
    train_set, test_set = resolve_data(data, checkpoint.config)
    dataset = test_set if test_set is not None else train_set
    if test_set is None:
        logger.warning(f"{data} has no test split; evaluating on its training split")

    result = evaluate(checkpoint, dataset)

    table = Table(title=f"Accuracy {result.accuracy:.4f} on {len(dataset)} samples", header_style="bold cyan")
    table.add_column("Class", justify="right")
    table.add_column("Samples", justify="right")
    table.add_column("Accuracy", justify="right")
    for cls, (count, accuracy) in enumerate(zip(result.class_counts, result.per_class_accuracy)):
        table.add_row(str(cls), str(int(count)), "-" if count == 0 else f"{accuracy:.4f}")
    console.print(table)

    out_dir = Path(args.out or args.checkpoint)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / CONFUSION_FILE, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["true_class", *(f"predicted_{c}" for c in range(result.confusion.shape[1]))])
        for cls, row in enumerate(result.confusion):
            writer.writerow([cls, *(int(v) for v in row)])
    console.print(f"accuracy={result.accuracy:.6f}")
    return 0
