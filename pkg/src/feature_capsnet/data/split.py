"""
Deterministic shuffling, stratified splitting and batching

Shuffles use xorshift64* seeded through splitmix64, with Fisher-Yates
indices drawn by the multiply-high reduction j = (r * (i + 1)) >> 64. The
algorithm is fixed so index sets can be reproduced outside this package.
"""

from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from ..errors import UsageError
from ..logs import get_logger
from .dataset import Dataset

logger = get_logger(__name__)

_MASK = (1 << 64) - 1


def splitmix64(value: int) -> int:
    z = (value + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class Xorshift64Star:
    """xorshift64* generator (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D)"""

    def __init__(self, seed: int, stream: int = 0):
        state = splitmix64((seed & _MASK) ^ splitmix64(stream & _MASK))
        self.state = state or 0x9E3779B97F4A7C15

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def below(self, bound: int) -> int:
        """Integer in [0, bound)"""
        return (self.next() * bound) >> 64


def permutation(n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Fisher-Yates permutation of range(n), a pure function of its arguments"""
    rng = Xorshift64Star(seed, stream)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return np.asarray(order, dtype=np.int64)


def _train_quotas(counts: np.ndarray, ratio: float) -> np.ndarray:
    """Per-class train sizes summing to round(ratio * N), by largest remainder"""
    exact = counts * ratio
    quotas = np.floor(exact + 1e-9).astype(np.int64)
    remaining = int(round(ratio * counts.sum())) - int(quotas.sum())
    if remaining > 0:
        fractions = exact - quotas
        room = quotas < counts
        order = sorted(np.flatnonzero(room), key=lambda c: (-fractions[c], c))
        for c in order[:remaining]:
            quotas[c] += 1
    return quotas


def split(dataset: Dataset, ratio: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Stratified train/test split with `ratio` of each class in train

    Raises:
        UsageError: If ratio is not strictly between 0 and 1
    """
    if not (0.0 < ratio < 1.0):
        raise UsageError(f"Split ratio must lie strictly between 0 and 1, got {ratio}")
    counts = dataset.class_counts()
    quotas = _train_quotas(counts, ratio)

    train_idx: List[np.ndarray] = []
    test_idx: List[np.ndarray] = []
    for cls in range(dataset.class_count):
        members = np.flatnonzero(dataset.labels == cls)
        shuffled = members[permutation(members.size, seed, stream=cls + 1)]
        train_idx.append(shuffled[:quotas[cls]])
        test_idx.append(shuffled[quotas[cls]:])
        if members.size and (quotas[cls] == 0 or quotas[cls] == members.size):
            side = "train" if quotas[cls] == 0 else "test"
            logger.warning(f"Class {cls} has no samples in the {side} split ({members.size} samples total)")

    train = np.sort(np.concatenate(train_idx)) if train_idx else np.empty(0, dtype=np.int64)
    test = np.sort(np.concatenate(test_idx)) if test_idx else np.empty(0, dtype=np.int64)
    return dataset.subset(train, "train"), dataset.subset(test, "test")


@dataclass
class Batch:
    images: np.ndarray
    labels: np.ndarray
    indices: np.ndarray


@dataclass
class BatchIterator:
    """Epoch-wise batches; the order of epoch e depends only on (seed, e)"""

    dataset: Dataset
    batch_size: int
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise UsageError(f"Batch size must be positive, got {self.batch_size}")

    def __len__(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def order(self, epoch: int) -> np.ndarray:
        if not self.shuffle:
            return np.arange(len(self.dataset), dtype=np.int64)
        return permutation(len(self.dataset), self.seed, stream=epoch)

    def epoch(self, epoch: int) -> Iterator[Batch]:
        order = self.order(epoch)
        for start in range(0, order.size, self.batch_size):
            idx = order[start:start + self.batch_size]
            yield Batch(self.dataset.images[idx], self.dataset.labels[idx], idx)
