"""
Benchmark tables and their CSV/JSON report files
"""

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from rich.table import Table

from ..errors import UsageError
from .accountant import max_batch
from .measure import SweepResult

REPORT_FILE = "report.json"

REPORT_NOTE = (
    "Memory figures are closed-form counts of parameters, gradients, Adam state and retained "
    "activations; they reproduce the class-head size arithmetic and ordinal trends, not a GPU "
    "allocator's absolute footprint. Times are single-threaded CPU wall-clock and are meaningful "
    "relative to each other, not as absolute GPU figures."
)


@dataclass
class ReportTable:
    """Rows are datasets, columns the class-mode baseline and the N_features sweep

    A None value is a missing cell.
    """

    name: str
    description: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    fingerprints: Dict[str, str] = field(default_factory=dict)

    @property
    def completed(self) -> int:
        return sum(1 for row in self.rows for col in self.columns if row.get(col) is not None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "description": self.description,
            "columns": ["dataset", *self.columns],
            "rows": [{"dataset": row["dataset"], **{c: row.get(c) for c in self.columns}} for row in self.rows],
        }

    def write_csv(self, path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["dataset", *self.columns])
            for row in self.rows:
                writer.writerow([row["dataset"], *("" if row.get(c) is None else _format(row[c]) for c in self.columns)])

    def render(self) -> Table:
        table = Table(title=self.description, show_header=True, header_style="bold cyan")
        table.add_column("Dataset", justify="left")
        for column in self.columns:
            table.add_column(column, justify="right")
        for row in self.rows:
            table.add_row(row["dataset"], *("-" if row.get(c) is None else _format(row[c]) for c in self.columns))
        return table


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def build_tables(result: SweepResult) -> List[ReportTable]:
    """Per-sample time, memory per sample, max batch, epoch time and class-head size tables"""
    sweep = result.sweep
    columns = sweep.columns()
    specs = [
        ("time_per_sample", "Training time (s) per sample per epoch"),
        ("memory_per_sample", "Accounted memory (MiB) per sample"),
        ("max_batch", f"Maximum batch size within {sweep.budget_bytes} bytes"),
        ("epoch_seconds", "Overall training time (s) per epoch"),
        ("fc_head_mib", "Class-head parameter memory (MiB)"),
    ]
    tables = {name: ReportTable(name, description, list(columns)) for name, description in specs}

    for dataset in sweep.datasets:
        rows = {name: {"dataset": dataset.name} for name in tables}
        for column in columns:
            key = f"{dataset.name}/{column}"
            report = result.reports.get(key)
            if report is None:
                continue
            cell = result.cell(dataset.name, column)
            seconds = cell.seconds_per_sample if cell is not None and cell.ok else None
            try:
                batch: Optional[int] = max_batch(report, sweep.budget_bytes)
            except UsageError:
                batch = None
            rows["time_per_sample"][column] = seconds
            rows["memory_per_sample"][column] = report.memory_mib_per_sample
            rows["max_batch"][column] = batch
            rows["epoch_seconds"][column] = None if seconds is None else seconds * dataset.train_count
            rows["fc_head_mib"][column] = report.fc_mib
            for table in tables.values():
                table.fingerprints[key] = report.config_fingerprint
        for name, table in tables.items():
            table.rows.append(rows[name])
    return list(tables.values())


def emit_report(
    tables: List[ReportTable],
    out_dir: str,
    metadata: Optional[Dict[str, Any]] = None,
) -> List[Path]:
    """Write one CSV per table and report.json

    The JSON carries the tables, every cell's config fingerprint, the report
    note and a generation timestamp; with identical inputs only the
    timestamp changes between runs.

    Raises:
        UsageError: If no table has a completed cell (nothing is written)
        OSError: If the output directory cannot be written
    """
    if not tables or all(table.completed == 0 for table in tables):
        raise UsageError("Report has no completed cells; nothing to write")

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    fingerprints: Dict[str, str] = {}
    for table in tables:
        path = root / f"{table.name}.csv"
        table.write_csv(path)
        written.append(path)
        fingerprints.update(table.fingerprints)

    document = {
        "note": REPORT_NOTE,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "tables": {table.name: table.to_dict() for table in tables},
        "config_fingerprints": dict(sorted(fingerprints.items())),
        "metadata": metadata or {},
    }
    report_path = root / REPORT_FILE
    report_path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(report_path)
    return written
