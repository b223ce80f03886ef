"""
Adam optimizer over network parameter tensors
"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from ..autodiff import Tensor
from ..errors import UsageError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First and second moment buffers, one pair per parameter, and the step count"""

    m: List[np.ndarray]
    v: List[np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: Sequence[Tensor]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(
    params: Sequence[Tensor],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
) -> AdamState:
    """Apply one bias-corrected Adam update in place

    Args:
        params: Trainable tensors, updated in place
        grads: Gradient buffers aligned with params
        state: Moment buffers sized like params; advanced in place
        lr: Learning rate

    Returns:
        The advanced state

    Raises:
        UsageError: If the buffers do not line up with the parameters
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise UsageError(
            f"Adam needs aligned buffers: {len(params)} params, {len(grads)} grads, "
            f"{len(state.m)}/{len(state.v)} moments"
        )

    state.step += 1
    bc1 = 1.0 - BETA1**state.step
    bc2 = 1.0 - BETA2**state.step
    step_size = lr / bc1

    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if grad.shape != param.shape or m.shape != param.shape:
            raise UsageError(f"Adam buffer shape mismatch for parameter of shape {param.shape}")
        m *= BETA1
        m += (1.0 - BETA1) * grad
        v *= BETA2
        v += (1.0 - BETA2) * (grad * grad)
        denom = np.sqrt(v / bc2) + EPSILON
        param.data -= (step_size * m / denom).astype(param.data.dtype, copy=False)
    return state


@dataclass
class Adam:
    """Stateful wrapper binding a parameter list to its moment buffers"""

    params: List[Tensor]
    lr: float = 1e-3
    state: AdamState = field(init=False)

    def __post_init__(self):
        self.state = AdamState.for_params(self.params)

    def step(self, grads: Sequence[np.ndarray]) -> None:
        adam_step(self.params, grads, self.state, self.lr)
