"""
Data package for feature-capsnet

This package contains dataset loading and batching:
- dataset: the immutable Dataset record
- idx: IDX (MNIST format) reader and writer
- image_dir: PGM folder corpora described by a manifest
- split: xorshift64* shuffles, stratified split, batch iteration
- synthetic: toy and stand-in corpora plus the corpus size catalog
- sources: `--data` argument resolution
"""

from .dataset import Dataset
from .idx import load_idx, write_idx
from .image_dir import load_image_dir
from .split import BatchIterator, permutation, split
from .synthetic import DATASET_CATALOG, preset_corpus, prototype_patterns, toy_blobs

__all__ = [
    "DATASET_CATALOG",
    "BatchIterator",
    "Dataset",
    "load_idx",
    "load_image_dir",
    "permutation",
    "preset_corpus",
    "prototype_patterns",
    "split",
    "toy_blobs",
    "write_idx",
]
