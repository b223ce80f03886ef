"""
Wall-clock sweep over datasets, head modes and N_features

Each cell times training passes (forward, backward, Adam step) over a fixed
sample and keeps the median seconds per sample over the repetitions. Cells
run in separate processes when more than one worker is configured; a cell
that fails is recorded as missing and the sweep carries on.
"""

import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..autodiff import Tape, precision
from ..config import NetworkConfig, build_config
from ..data import Dataset, prototype_patterns
from ..data.sources import resolve_data
from ..layers import CapsuleNetwork
from ..logs import get_logger
from ..losses import network_loss
from ..training import Adam
from .accountant import CostReport, account
from .sweep import SweepDataset, SweepSpec, feature_column

logger = get_logger(__name__)


@dataclass
class CellSpec:
    dataset: SweepDataset
    column: str
    config: Dict[str, Any]
    timing_samples: int
    repetitions: int


@dataclass
class CellResult:
    dataset: str
    column: str
    config_fingerprint: str
    status: str
    seconds_per_sample: Optional[float] = None
    repetitions: List[float] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SweepResult:
    """Measured cells plus the cost report of every cell's config"""

    sweep: SweepSpec
    cells: List[CellResult]
    reports: Dict[str, CostReport]

    @property
    def completed(self) -> int:
        return sum(1 for cell in self.cells if cell.ok)

    def cell(self, dataset: str, column: str) -> Optional[CellResult]:
        for cell in self.cells:
            if cell.dataset == dataset and cell.column == column:
                return cell
        return None


def plan_cells(sweep: SweepSpec) -> List[CellSpec]:
    """Expand a sweep into cells in table order"""
    cells = []
    for dataset in sweep.datasets:
        base = {**sweep.base_config, "n_class": dataset.classes, "seed": sweep.seed}
        if "class" in sweep.head_modes:
            config = build_config(base, head_mode="class")
            cells.append(CellSpec(dataset, "capsnet", config.to_dict(), sweep.timing_samples, sweep.repetitions))
        if "feature" in sweep.head_modes:
            for k in sweep.features_for(dataset):
                config = build_config(base, head_mode="feature", n_features=k)
                cells.append(CellSpec(dataset, feature_column(k), config.to_dict(), sweep.timing_samples, sweep.repetitions))
    return cells


def _timing_sample(dataset: SweepDataset, config: NetworkConfig, count: int) -> Dataset:
    if dataset.source is None:
        size = (config.image_height, config.image_width)
        return prototype_patterns(dataset.classes, count, size, config.seed, name=dataset.name)
    train, _ = resolve_data(dataset.source, config)
    return train.subset(np.arange(min(count, len(train))), "train")


def time_training_pass(config: NetworkConfig, sample: Dataset) -> float:
    """Seconds per sample of one training pass over `sample`"""
    network = CapsuleNetwork(config)
    params = network.parameters()
    optimizer = Adam(params, config.learning_rate)
    started = time.perf_counter()
    with precision(config.dtype):
        for start in range(0, len(sample), config.batch_size):
            images = sample.images[start:start + config.batch_size]
            labels = sample.labels[start:start + config.batch_size]
            with Tape() as tape:
                x = network.as_input(images)
                output = network.forward(x, labels, with_reconstruction=True)
                losses = network_loss(output, x, labels, config.head_mode, config.loss)
                tape.backward(losses.total)
                grads = tape.gradients(params)
            optimizer.step(grads)
    return (time.perf_counter() - started) / len(sample)


def run_cell(cell: CellSpec) -> CellResult:
    """Time one cell; failures come back as a missing cell, never as an exception"""
    config = build_config(cell.config)
    result = CellResult(cell.dataset.name, cell.column, config.fingerprint(), status="missing")
    try:
        sample = _timing_sample(cell.dataset, config, cell.timing_samples)
        # untimed warm-up pass
        time_training_pass(config, sample)
        result.repetitions = [time_training_pass(config, sample) for _ in range(cell.repetitions)]
        result.seconds_per_sample = statistics.median(result.repetitions)
        result.status = "ok"
    except Exception as e:
        result.error = f"{type(e).__name__}: {e}"
    return result


def measure(sweep: SweepSpec) -> SweepResult:
    """Run every cell of the sweep and account each cell's config

    Returns:
        SweepResult whose tables mirror the per-sample time, memory, batch
        and epoch-time layouts
    """
    cells = plan_cells(sweep)
    reports = {f"{c.dataset.name}/{c.column}": account(build_config(c.config)) for c in cells}

    if sweep.workers > 1 and len(cells) > 1:
        results: List[CellResult] = []
        with ProcessPoolExecutor(max_workers=sweep.workers) as pool:
            futures = [pool.submit(run_cell, cell) for cell in cells]
            for cell, future in zip(cells, futures):
                try:
                    results.append(future.result())
                except Exception as e:
                    fingerprint = build_config(cell.config).fingerprint()
                    results.append(
                        CellResult(cell.dataset.name, cell.column, fingerprint, "missing", error=f"{type(e).__name__}: {e}")
                    )
    else:
        results = [run_cell(cell) for cell in cells]

    for result in results:
        if result.ok:
            logger.info(f"{result.dataset} / {result.column}: {result.seconds_per_sample * 1e3:.3f} ms/sample")
        else:
            logger.warning(f"{result.dataset} / {result.column}: cell missing ({result.error})")
    return SweepResult(sweep, results, reports)

