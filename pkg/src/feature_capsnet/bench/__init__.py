"""
Benchmark package for feature-capsnet

- accountant: closed-form parameter, memory and FLOP counts
- sweep: the sweep specification
- measure: wall-clock sweep driver
- report: tables, CSV and JSON report files
"""

from .accountant import CostReport, LayerCost, account, max_batch
from .measure import CellResult, SweepResult, measure, plan_cells, run_cell
from .report import ReportTable, build_tables, emit_report
from .sweep import SweepDataset, SweepSpec, build_sweep, load_sweep_file

__all__ = [
    "CellResult",
    "CostReport",
    "LayerCost",
    "ReportTable",
    "SweepDataset",
    "SweepResult",
    "SweepSpec",
    "account",
    "build_sweep",
    "build_tables",
    "emit_report",
    "load_sweep_file",
    "max_batch",
    "measure",
    "plan_cells",
    "run_cell",
]
