"""
Classification head and reconstruction decoder
"""

from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor
from ..autodiff import ops
from ..errors import UsageError
from .base import Dense, Layer, glorot_uniform, zeros_parameter


class FcHead(Layer):
    """Flattened feature capsules -> affine map -> softmax over classes"""

    def __init__(self, rng: np.random.Generator, n_features: int, n_class: int, capsule_dim: int = 16):
        n_in = capsule_dim * n_features
        self.n_features = n_features
        self.n_class = n_class
        self.weights = glorot_uniform(rng, (n_in, n_class), n_in, n_class, name="weights")
        self.bias = zeros_parameter((n_class,), name="bias")

    def forward(self, features: Tensor) -> Tuple[Tensor, Tensor]:
        """Class probabilities and logits, both [B, N_class]"""
        batch = features.shape[0]
        flat = ops.reshape(features, (batch, -1))
        logits = ops.add(ops.matmul(flat, self.weights), self.bias)
        return ops.softmax(logits, axis=-1), logits


class Decoder(Layer):
    """Three dense stages (relu, relu, sigmoid) from capsules to pixels

    Class mode decodes only the masked capsule; feature mode decodes every
    feature capsule as is.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        mode: Literal["class", "feature"],
        n_out: int,
        n_pixels: int,
        hidden: Sequence[int] = (512, 1024),
        capsule_dim: int = 16,
    ):
        self.mode = mode
        self.n_out = n_out
        self.n_pixels = n_pixels
        widths = [capsule_dim * n_out, *hidden, n_pixels]
        self.stages = [Dense(rng, n_in, n_next) for n_in, n_next in zip(widths[:-1], widths[1:])]

    def decoder_input(self, caps: Tensor, mask: Optional[Sequence[int]] = None) -> Tensor:
        """Flattened (and, in class mode, masked) capsules [B, 16 * N_out]

        Raises:
            UsageError: If a mask is missing in class mode, given in feature
                mode, or names a capsule that does not exist
        """
        batch = caps.shape[0]
        if self.mode == "feature":
            if mask is not None:
                raise UsageError("Feature-mode decoding takes every feature capsule; no mask is allowed")
            return ops.reshape(caps, (batch, -1))

        if mask is None:
            raise UsageError("Class-mode decoding requires a mask index per sample")
        mask = np.asarray(mask, dtype=np.int64).reshape(-1)
        if mask.shape[0] != batch:
            raise UsageError(f"Mask has {mask.shape[0]} entries for a batch of {batch}")
        if mask.size and (mask.min() < 0 or mask.max() >= self.n_out):
            raise UsageError(f"Mask index out of range [0, {self.n_out})")
        one_hot = np.zeros((batch, self.n_out, 1), dtype=caps.data.dtype)
        one_hot[np.arange(batch), mask, 0] = 1
        return ops.reshape(ops.mul(caps, one_hot), (batch, -1))

    def forward(self, caps: Tensor, mask: Optional[Sequence[int]] = None) -> Tensor:
        return self.decode(caps, mask)

    def decode(self, caps: Tensor, mask: Optional[Sequence[int]] = None) -> Tensor:
        """Reconstructed images [B, H*W] with every pixel in (0, 1)"""
        x = self.decoder_input(caps, mask)
        for stage in self.stages[:-1]:
            x = ops.relu(stage(x))
        return ops.sigmoid(self.stages[-1](x))
