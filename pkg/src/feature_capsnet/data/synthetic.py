"""
Synthetic stand-in corpora

Used where real handwriting files are not at hand: tests, gradient checks,
the timing sweep and `--data synthetic:<kind>`.
"""

from typing import Dict, NamedTuple, Tuple

import numpy as np

from .dataset import Dataset


class CorpusPreset(NamedTuple):
    classes: int
    train: int
    test: int


# Class and split sizes of the handwritten corpora the cost tables cover
DATASET_CATALOG: Dict[str, CorpusPreset] = {
    "bangla-numeral": CorpusPreset(10, 4000, 2000),
    "devanagari-numeral": CorpusPreset(10, 2000, 1000),
    "telugu-numeral": CorpusPreset(10, 2000, 1000),
    "bangla-basic": CorpusPreset(50, 12000, 3000),
    "bangla-compound": CorpusPreset(199, 33282, 8254),
}


def toy_blobs(n: int = 20, size: Tuple[int, int] = (28, 28), seed: int = 0, noise: float = 0.05) -> Dataset:
    """Two linearly separable classes: a bright blob top-left or bottom-right"""
    rng = np.random.default_rng(seed)
    height, width = size
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float32)
    centers = [(height * 0.3, width * 0.3), (height * 0.7, width * 0.7)]
    spread = max(height, width) * 0.12

    labels = np.arange(n, dtype=np.int64) % 2
    images = np.empty((n, 1, height, width), dtype=np.float32)
    for i, label in enumerate(labels):
        cy, cx = centers[label]
        cy += rng.uniform(-1.0, 1.0)
        cx += rng.uniform(-1.0, 1.0)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * spread**2))
        images[i, 0] = np.clip(blob + rng.normal(0.0, noise, size=blob.shape), 0.0, 1.0)
    return Dataset(images, labels, 2, "all", "toy-blobs")


def _box_blur(image: np.ndarray) -> np.ndarray:
    padded = np.pad(image, 1)
    total = sum(padded[dy:dy + image.shape[0], dx:dx + image.shape[1]] for dy in range(3) for dx in range(3))
    return total / 9.0


def prototype_patterns(
    n_class: int,
    count: int,
    size: Tuple[int, int] = (28, 28),
    seed: int = 0,
    noise: float = 0.1,
    density: float = 0.12,
    name: str = "patterns",
) -> Dataset:
    """Balanced corpus of jittered, noisy copies of one random stroke pattern per class"""
    rng = np.random.default_rng(seed)
    height, width = size
    prototypes = []
    for _ in range(n_class):
        mask = (rng.random((height, width)) < density).astype(np.float32)
        pattern = _box_blur(mask)
        prototypes.append(pattern / max(float(pattern.max()), 1e-6))

    labels = np.arange(count, dtype=np.int64) % n_class
    images = np.empty((count, 1, height, width), dtype=np.float32)
    for i, label in enumerate(labels):
        shift = rng.integers(-1, 2, size=2)
        shifted = np.roll(prototypes[label], shift=tuple(shift), axis=(0, 1))
        images[i, 0] = np.clip(shifted + rng.normal(0.0, noise, size=shifted.shape), 0.0, 1.0)
    return Dataset(images, labels, n_class, "all", name)


def preset_corpus(preset: str, size: Tuple[int, int] = (28, 28), seed: int = 0,
                  train_limit: int = 0) -> Tuple[Dataset, Dataset]:
    """Synthetic train/test pair with a catalog entry's class count and sizes

    `train_limit` caps the generated train split (the test split shrinks in
    proportion) when only a timing sample is needed.
    """
    entry = DATASET_CATALOG[preset]
    n_train, n_test = entry.train, entry.test
    if train_limit and train_limit < n_train:
        n_test = max(entry.classes, round(n_test * train_limit / n_train))
        n_train = train_limit
    corpus = prototype_patterns(entry.classes, n_train + n_test, size, seed, name=preset)
    train_idx = np.arange(n_train)
    test_idx = np.arange(n_train, n_train + n_test)
    return corpus.subset(train_idx, "train"), corpus.subset(test_idx, "test")
