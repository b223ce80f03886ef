"""
Per-epoch training metrics
"""

import csv
from dataclasses import asdict, astuple, dataclass, fields
from pathlib import Path
from typing import List, Tuple

from ..errors import IngestError, UsageError


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    mean_loss: float
    train_accuracy: float
    seconds: float
    seconds_per_sample: float


COLUMNS = [f.name for f in fields(EpochMetrics)]


class MetricLog:
    """Rows of EpochMetrics in strictly increasing epoch order"""

    def __init__(self, rows=None):
        self.rows: List[EpochMetrics] = []
        for row in rows or []:
            self.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: EpochMetrics) -> None:
        if self.rows and row.epoch <= self.rows[-1].epoch:
            raise UsageError(f"Metric rows must increase in epoch: {row.epoch} after {self.rows[-1].epoch}")
        self.rows.append(row)

    def learning_curve(self) -> List[Tuple[int, float, float]]:
        """(epoch, mean loss, train accuracy) rows; the wall-clock free part of the log"""
        return [(r.epoch, r.mean_loss, r.train_accuracy) for r in self.rows]

    def best(self) -> EpochMetrics:
        """Row with the highest train accuracy, earliest on ties"""
        if not self.rows:
            raise UsageError("Metric log is empty")
        return max(self.rows, key=lambda r: (r.train_accuracy, -r.epoch))

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(COLUMNS)
            for row in self.rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(row)])

    @classmethod
    def from_csv(cls, path: str) -> "MetricLog":
        try:
            with open(path, newline="", encoding="utf-8") as f:
                reader = csv.DictReader(f)
                rows = [
                    EpochMetrics(
                        epoch=int(rec["epoch"]),
                        mean_loss=float(rec["mean_loss"]),
                        train_accuracy=float(rec["train_accuracy"]),
                        seconds=float(rec["seconds"]),
                        seconds_per_sample=float(rec["seconds_per_sample"]),
                    )
                    for rec in reader
                ]
        except (OSError, KeyError, ValueError) as e:
            raise IngestError(f"Could not read metric log: {e}", path=path) from e
        return cls(rows)

    def to_dicts(self) -> List[dict]:
        return [asdict(r) for r in self.rows]
