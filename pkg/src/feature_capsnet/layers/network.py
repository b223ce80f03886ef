"""
The full capsule network in either head mode
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np

from ..autodiff import Tensor, precision
from ..config import NetworkConfig
from ..errors import ShapeError, UsageError
from .base import Layer
from .capsule import class_lengths, predict_classes
from .heads import Decoder, FcHead
from .primary import PrimaryCapsLayer
from .routing import RoutingLayer, RoutingState


@dataclass
class NetworkOutput:
    """Result of one forward pass

    `scores` are capsule lengths (class mode) or softmax probabilities
    (feature mode); `logits` are the lengths again or the pre-softmax head
    outputs.
    """

    scores: Tensor
    logits: Tensor
    routing: RoutingState
    predictions: np.ndarray
    reconstruction: Optional[Tensor] = None


class CapsuleNetwork(Layer):
    """Primary capsules -> dynamic routing -> class lengths or FC head, plus decoder"""

    def __init__(self, config: NetworkConfig, seed: Optional[int] = None):
        self.config = config
        rng = np.random.default_rng(config.seed if seed is None else seed)
        with precision(config.dtype):
            self.primary = PrimaryCapsLayer(config, rng)
            self.routing = RoutingLayer(
                rng,
                n_in=config.n_primary,
                n_out=config.n_out,
                iterations=config.routing_iters,
                mode=config.head_mode,
                in_dim=config.primary_dim,
                out_dim=config.capsule_dim,
            )
            self.head = (
                FcHead(rng, config.n_out, config.n_class, config.capsule_dim)
                if config.head_mode == "feature"
                else None
            )
            self.decoder = Decoder(
                rng,
                config.head_mode,
                n_out=config.n_out,
                n_pixels=config.n_pixels,
                hidden=config.decoder_hidden,
                capsule_dim=config.capsule_dim,
            )

    @property
    def mode(self) -> str:
        return self.config.head_mode

    def as_input(self, images: Union[Tensor, np.ndarray]) -> Tensor:
        """Wrap a numpy batch [B, 1, H, W] as a tensor of the network's float width"""
        if isinstance(images, Tensor):
            return images
        tensor = Tensor(images, dtype=self.config.dtype)
        expected = (1, self.config.image_height, self.config.image_width)
        if tensor.ndim != 4 or tensor.shape[1:] != expected:
            raise ShapeError("network input", tensor.shape, (None, *expected))
        return tensor

    def forward(
        self,
        images: Union[Tensor, np.ndarray],
        labels: Optional[Sequence[int]] = None,
        with_reconstruction: bool = False,
    ) -> NetworkOutput:
        """Run the network on a batch

        With `with_reconstruction`, class mode decodes the capsule of the
        given label (or of the prediction when no labels are given) and
        feature mode decodes all feature capsules.
        """
        x = self.as_input(images)
        state = self.routing(self.primary(x))
        if self.head is None:
            scores = class_lengths(state.v)
            logits = scores
        else:
            scores, logits = self.head(state.v)
        predictions = predict_classes(scores.data)

        reconstruction = None
        if with_reconstruction:
            if self.mode == "class":
                mask = predictions if labels is None else np.asarray(labels, dtype=np.int64)
                reconstruction = self.decoder.decode(state.v, mask)
            else:
                reconstruction = self.decoder.decode(state.v)
        return NetworkOutput(scores, logits, state, predictions, reconstruction)

    def reconstruct(self, images: Union[Tensor, np.ndarray], target_class: Optional[int] = None) -> np.ndarray:
        """Decoded images [B, H, W]

        Class mode decodes the capsule of `target_class` for every sample (the
        predicted class when omitted), giving class-specific reconstructions.
        Feature mode decodes all feature capsules and takes no target.
        """
        x = self.as_input(images)
        state = self.routing(self.primary(x))
        if self.mode == "feature":
            if target_class is not None:
                raise UsageError("Feature-mode reconstruction decodes every feature capsule; no target class")
            out = self.decoder.decode(state.v)
        else:
            if target_class is None:
                mask = predict_classes(class_lengths(state.v).data)
            else:
                mask = np.full(x.shape[0], int(target_class), dtype=np.int64)
            out = self.decoder.decode(state.v, mask)
        return out.data.reshape(x.shape[0], self.config.image_height, self.config.image_width)

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter keyed by dotted name"""
        return {name: p.numpy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Overwrite parameters in place from a state dict

        Raises:
            UsageError: If names or shapes differ from this network's
        """
        params = dict(self.named_parameters())
        if set(params) != set(state):
            missing = sorted(set(params) - set(state))
            unexpected = sorted(set(state) - set(params))
            raise UsageError(f"State dict mismatch: missing {missing}, unexpected {unexpected}")
        for name, tensor in params.items():
            values = np.asarray(state[name])
            if values.shape != tensor.shape:
                raise UsageError(f"State dict entry {name} has shape {values.shape}, expected {tensor.shape}")
            tensor.data[...] = values.astype(tensor.data.dtype)
