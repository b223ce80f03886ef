"""
Shared plumbing for network layers: parameter discovery and initialization
"""

from typing import Iterator, List, Sequence, Tuple

import numpy as np

from ..autodiff import Tensor, default_dtype
from ..autodiff import ops


def glorot_uniform(rng: np.random.Generator, shape: Sequence[int], fan_in: int, fan_out: int, name: str) -> Tensor:
    """Trainable tensor drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out))"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    values = rng.uniform(-limit, limit, size=tuple(shape))
    return Tensor(values.astype(default_dtype()), requires_grad=True, name=name)


def zeros_parameter(shape: Sequence[int], name: str) -> Tensor:
    return Tensor(np.zeros(tuple(shape), dtype=default_dtype()), requires_grad=True, name=name)


class Layer:
    """Base class: trainable tensors and sub-layers are found by attribute walk"""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for attr, value in vars(self).items():
            key = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield key, value
            elif isinstance(value, Layer):
                yield from value.named_parameters(f"{key}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Layer):
                        yield from item.named_parameters(f"{key}.{i}.")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


class Dense(Layer):
    """Affine map x @ W + b"""

    def __init__(self, rng: np.random.Generator, n_in: int, n_out: int):
        self.weights = glorot_uniform(rng, (n_in, n_out), n_in, n_out, name="weights")
        self.bias = zeros_parameter((n_out,), name="bias")

    def forward(self, x: Tensor) -> Tensor:
        return ops.add(ops.matmul(x, self.weights), self.bias)
