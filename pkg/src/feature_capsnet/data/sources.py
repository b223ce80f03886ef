"""
Resolution of `--data` arguments into train/test datasets

Accepted forms:
- a directory with MNIST-named IDX files (train-images-idx3-ubyte[.gz], ...)
- a directory with manifest.csv (PGM corpus, split 2:1 under the seed)
- synthetic:blobs, synthetic:patterns[:<train>:<test>], synthetic:<catalog name>
"""

from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..config import NetworkConfig
from ..errors import IngestError
from ..logs import get_logger
from .dataset import Dataset
from .idx import load_idx
from .image_dir import fit_and_pad, load_image_dir, resize_bilinear
from .split import split
from .synthetic import DATASET_CATALOG, preset_corpus, prototype_patterns, toy_blobs

logger = get_logger(__name__)

TRAIN_SPLIT_RATIO = 2.0 / 3.0


def _find(root: Path, stem: str) -> Optional[Path]:
    for suffix in ("", ".gz"):
        candidate = root / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def conform(dataset: Dataset, size: Tuple[int, int], policy: str) -> Dataset:
    """Bring every image to `size` with the configured resize policy"""
    if dataset.image_size == tuple(size):
        return dataset
    height, width = size
    transform = resize_bilinear if policy == "resize" else fit_and_pad
    images = np.stack([transform(img[0], height, width) for img in dataset.images])[:, None]
    return Dataset(images, dataset.labels, dataset.class_count, dataset.split, dataset.name)


def _adopt_class_count(dataset: Dataset, n_class: int) -> Dataset:
    """Widen an inferred class count to the configured one when every label fits"""
    if dataset.class_count >= n_class:
        return dataset
    return Dataset(dataset.images, dataset.labels, n_class, dataset.split, dataset.name)


def _synthetic(kind: str, config: NetworkConfig) -> Tuple[Dataset, Dataset]:
    size = (config.image_height, config.image_width)
    name, *counts = kind.split(":")
    if name == "blobs":
        test = toy_blobs(10, size, config.seed + 1)
        return toy_blobs(20, size, config.seed).subset(np.arange(20), "train"), test.subset(np.arange(10), "test")
    if name == "patterns":
        try:
            n_train, n_test = (int(c) for c in counts) if counts else (20 * config.n_class, 10 * config.n_class)
        except ValueError:
            raise IngestError(f"Expected synthetic:patterns:<train>:<test>, got synthetic:{kind}") from None
        corpus = prototype_patterns(config.n_class, n_train + n_test, size, config.seed)
        return corpus.subset(np.arange(n_train), "train"), corpus.subset(np.arange(n_train, n_train + n_test), "test")
    if name in DATASET_CATALOG:
        return preset_corpus(name, size, config.seed)
    raise IngestError(f"Unknown synthetic corpus {kind!r}; choose blobs, patterns or one of {sorted(DATASET_CATALOG)}")


def resolve_data(spec: str, config: NetworkConfig) -> Tuple[Dataset, Optional[Dataset]]:
    """Load (train, test) for a `--data` argument, conformed to the config

    File corpora keep their own class count unless the configured one is
    larger, so a class-count mismatch surfaces when the set is used.

    Raises:
        IngestError: If the argument names nothing loadable
    """
    if spec.startswith("synthetic:"):
        train, test = _synthetic(spec.removeprefix("synthetic:"), config)
        return train, test

    root = Path(spec)
    if not root.is_dir():
        raise IngestError("Data path is not a directory", path=str(root))

    size = (config.image_height, config.image_width)
    train_images = _find(root, "train-images-idx3-ubyte")
    train_labels = _find(root, "train-labels-idx1-ubyte")
    if train_images and train_labels:
        train = load_idx(str(train_images), str(train_labels), name=root.name)
        train = _adopt_class_count(train, config.n_class)
        train = conform(Dataset(train.images, train.labels, train.class_count, "train", train.name), size, config.resize_policy)
        test = None
        test_images = _find(root, "t10k-images-idx3-ubyte")
        test_labels = _find(root, "t10k-labels-idx1-ubyte")
        if test_images and test_labels:
            loaded = _adopt_class_count(load_idx(str(test_images), str(test_labels), name=root.name), config.n_class)
            test = conform(Dataset(loaded.images, loaded.labels, loaded.class_count, "test", loaded.name),
                           size, config.resize_policy)
        logger.info(f"Loaded IDX corpus {root.name}: {len(train)} train, {len(test) if test else 0} test")
        return train, test

    if (root / "manifest.csv").exists():
        corpus = load_image_dir(str(root), size=size, resize_policy=config.resize_policy)
        corpus = _adopt_class_count(corpus, config.n_class)
        train, test = split(corpus, TRAIN_SPLIT_RATIO, config.seed)
        logger.info(f"Loaded image corpus {root.name}: {len(train)} train, {len(test)} test")
        return train, test

    raise IngestError("Directory holds neither IDX files nor manifest.csv", path=str(root))
