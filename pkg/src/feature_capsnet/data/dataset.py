"""
Labeled grayscale image collections
"""

import hashlib
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..errors import UsageError

Split = Literal["train", "test", "all"]


@dataclass(frozen=True)
class Dataset:
    """Images [N, 1, H, W] in [0, 1] with integer labels in [0, class_count)

    Treated as immutable after construction; iterators and splits only
    index into it.
    """

    images: np.ndarray
    labels: np.ndarray
    class_count: int
    split: Split = "all"
    name: str = "dataset"

    def __post_init__(self):
        images = np.ascontiguousarray(self.images, dtype=np.float32)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64).reshape(-1)
        if images.ndim != 4 or images.shape[1] != 1:
            raise UsageError(f"Dataset images must have shape [N, 1, H, W], got {images.shape}")
        if images.shape[0] != labels.shape[0]:
            raise UsageError(f"Dataset has {images.shape[0]} images but {labels.shape[0]} labels")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise UsageError(f"Labels must lie in [0, {self.class_count}), found range [{labels.min()}, {labels.max()}]")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def image_size(self) -> tuple:
        return tuple(self.images.shape[2:])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, indices: Sequence[int], split: Split) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices], self.class_count, split, self.name)

    def fingerprint(self) -> str:
        """Content hash of pixels, labels and class count"""
        digest = hashlib.sha256()
        digest.update(np.asarray(self.images.shape, dtype=np.int64).tobytes())
        digest.update(self.images.tobytes())
        digest.update(self.labels.tobytes())
        digest.update(str(self.class_count).encode("ascii"))
        return digest.hexdigest()
