"""
Capsule nonlinearity and readout
"""

import numpy as np

from ..autodiff import Tensor
from ..autodiff import ops


def squash(s: Tensor) -> Tensor:
    """Shrink each capsule (last axis) to length |s|^2 / (1 + |s|^2)

    Written as s * |s| / (1 + |s|^2) so the zero vector maps to zero with a
    zero gradient instead of dividing by its norm.
    """
    norm = ops.l2norm(s, keepdims=True)
    factor = ops.div(norm, ops.add(ops.mul(norm, norm), 1.0))
    return ops.mul(s, factor)


def class_lengths(v: Tensor) -> Tensor:
    """Capsule lengths [B, N_class] read as class likelihoods"""
    return ops.l2norm(v)


def predict_classes(scores: np.ndarray) -> np.ndarray:
    """Argmax per row; ties go to the lowest class index"""
    return np.argmax(np.asarray(scores), axis=1).astype(np.int64)
