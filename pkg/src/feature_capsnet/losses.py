"""
Margin losses, reconstruction loss and the combined objective

Per-class margin terms are summed within a sample and averaged over the
batch. Both margin variants share one functional form; they differ only in
what the score is (a capsule length or a softmax probability).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .autodiff import Tensor
from .autodiff import ops
from .config import LossConfig
from .errors import UsageError


def _targets(labels: Sequence[int], batch: int, n_class: int, dtype) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != batch:
        raise UsageError(f"Got {labels.shape[0]} labels for a batch of {batch}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_class):
        bad = int(labels[(labels < 0) | (labels >= n_class)][0])
        raise UsageError(f"Label {bad} out of range [0, {n_class})")
    targets = np.zeros((batch, n_class), dtype=dtype)
    targets[np.arange(batch), labels] = 1
    return targets


def _margin(scores: Tensor, labels: Sequence[int], config: LossConfig) -> Tensor:
    if scores.ndim != 2:
        raise UsageError(f"Margin loss expects scores of shape [B, N_class], got {scores.shape}")
    batch, n_class = scores.shape
    targets = _targets(labels, batch, n_class, scores.data.dtype)

    present = ops.relu(ops.sub(config.m_plus, scores))
    absent = ops.relu(ops.sub(scores, config.m_minus))
    per_class = ops.add(
        ops.mul(targets, ops.mul(present, present)),
        ops.scale(ops.mul(1 - targets, ops.mul(absent, absent)), config.lam),
    )
    return ops.mean(ops.sum(per_class, axis=1))


def margin_loss_class(lengths: Tensor, labels: Sequence[int], config: Optional[LossConfig] = None) -> Tensor:
    """Margin loss on class-capsule lengths

    Raises:
        UsageError: If a label is outside [0, N_class)
    """
    return _margin(lengths, labels, config or LossConfig())


def margin_loss_feature(probs: Tensor, labels: Sequence[int], config: Optional[LossConfig] = None) -> Tensor:
    """Margin loss on softmax-head probabilities

    Raises:
        UsageError: If a label is outside [0, N_class)
    """
    return _margin(probs, labels, config or LossConfig())


def reconstruction_loss(images: Tensor, reconstruction: Tensor) -> Tensor:
    """Mean squared error over pixels and batch

    Raises:
        UsageError: If the batch or pixel counts differ
    """
    if images.shape[0] != reconstruction.shape[0] or images.size != reconstruction.size:
        raise UsageError(f"Reconstruction of shape {reconstruction.shape} does not match images of shape {images.shape}")
    flat = ops.reshape(images, reconstruction.shape)
    return ops.mse(flat, reconstruction)


def total_loss(margin: Tensor, recon: Optional[Tensor], config: Optional[LossConfig] = None,
               beta: Optional[float] = None) -> Tensor:
    """margin + beta * recon; `beta` overrides the configured scale"""
    if recon is None:
        return margin
    scale = (config or LossConfig()).beta if beta is None else beta
    return ops.add(margin, ops.scale(recon, scale))


@dataclass
class LossBreakdown:
    margin: Tensor
    reconstruction: Optional[Tensor]
    total: Tensor


def network_loss(output, images: Tensor, labels: Sequence[int], head_mode: str,
                 config: Optional[LossConfig] = None) -> LossBreakdown:
    """Objective of one training batch for either head mode"""
    config = config or LossConfig()
    if head_mode == "class":
        margin = margin_loss_class(output.scores, labels, config)
    else:
        margin = margin_loss_feature(output.scores, labels, config)
    recon = None
    if output.reconstruction is not None:
        recon = reconstruction_loss(images, output.reconstruction)
    return LossBreakdown(margin, recon, total_loss(margin, recon, config))
