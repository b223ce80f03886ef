"""
Dynamic routing between primary capsules and output capsules

The same layer serves both head modes: in class mode each output capsule
stands for a class (N_out = N_class); in feature mode it stands for a learned
feature (N_out = N_features) and the shapes involved never mention N_class.
"""

from dataclasses import dataclass, field
from typing import List, Literal

import numpy as np

from ..autodiff import Tensor
from ..autodiff import ops
from ..errors import ConfigurationError, ShapeError
from .base import Layer, glorot_uniform
from .capsule import squash


@dataclass
class RoutingState:
    """Tensors of one forward pass through the routing layer

    `b`, `c` are the logits and coupling coefficients of the final iteration;
    `coupling_history` holds a copy of c from every iteration.
    """

    u_hat: Tensor
    b: Tensor
    c: Tensor
    s: Tensor
    v: Tensor
    coupling_history: List[np.ndarray] = field(default_factory=list)


class RoutingLayer(Layer):
    """Transformation weights W [N_PC, N_out, d_in, d_out] plus the routing loop"""

    def __init__(
        self,
        rng: np.random.Generator,
        n_in: int,
        n_out: int,
        iterations: int = 3,
        mode: Literal["class", "feature"] = "class",
        in_dim: int = 8,
        out_dim: int = 16,
    ):
        if iterations < 1:
            raise ConfigurationError(f"Routing needs at least one iteration, got {iterations}")
        self.n_in = n_in
        self.n_out = n_out
        self.iterations = iterations
        self.mode = mode
        self.in_dim = in_dim
        self.out_dim = out_dim
        # W acts as one dense map from all primary components to all output components
        self.W = glorot_uniform(rng, (n_in, n_out, in_dim, out_dim), n_in * in_dim, n_out * out_dim, name="W")

    def predict(self, u: Tensor) -> Tensor:
        """Prediction vectors u_hat[b, i, j] = u[b, i] @ W[i, j]"""
        if u.ndim != 3 or u.shape[1] != self.n_in or u.shape[2] != self.in_dim:
            raise ShapeError("dynamic_routing", u.shape, (None, self.n_in, self.in_dim))
        batch = u.shape[0]
        per_capsule = ops.transpose(u, (1, 0, 2))
        weights = ops.reshape(
            ops.transpose(self.W, (0, 2, 1, 3)), (self.n_in, self.in_dim, self.n_out * self.out_dim)
        )
        votes = ops.matmul(per_capsule, weights)
        votes = ops.reshape(votes, (self.n_in, batch, self.n_out, self.out_dim))
        return ops.transpose(votes, (1, 0, 2, 3))

    def forward(self, u: Tensor) -> RoutingState:
        """Route squashed primary capsules u [B, N_PC, d_in] to N_out capsules"""
        return dynamic_routing(u, self)


def dynamic_routing(u: Tensor, layer: RoutingLayer) -> RoutingState:
    """Routing by agreement, kept on the tape through every iteration

    Logits start at zero on every call; they are not parameters and are
    never touched by the optimizer.
    """
    if layer.iterations < 1:
        raise ConfigurationError(f"Routing needs at least one iteration, got {layer.iterations}")
    u_hat = layer.predict(u)
    batch = u.shape[0]
    b = Tensor.zeros((batch, layer.n_in, layer.n_out), dtype=u.data.dtype)

    history: List[np.ndarray] = []
    for iteration in range(layer.iterations):
        c = ops.softmax(b, axis=2)
        history.append(c.numpy())
        s = ops.sum(ops.mul(ops.expand_dims(c, 3), u_hat), axis=1)
        v = squash(s)
        if iteration < layer.iterations - 1:
            agreement = ops.sum(ops.mul(u_hat, ops.expand_dims(v, 1)), axis=3)
            b = ops.add(b, agreement)

    return RoutingState(u_hat=u_hat, b=b, c=c, s=s, v=v, coupling_history=history)
