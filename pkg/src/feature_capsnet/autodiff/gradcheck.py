"""
Central finite-difference gradient checking
"""

from dataclasses import dataclass, asdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ShapeError
from .tensor import Tape, Tensor, precision

# relative tolerance per float width of the analytic gradients
TOLERANCES: Dict[str, float] = {
    "float32": 1e-2,
    "float64": 1e-5,
}

# central-difference step per float width the quotient is evaluated in
STEPS: Dict[str, float] = {
    "float32": 1e-3,
    "float64": 1e-5,
}

# rounding noise of a quotient, in units of machine eps * |loss| / step
NOISE_MULTIPLE = 50.0

# attempts per tensor, in units of the requested sample count
REDRAW_LIMIT = 5

LossFn = Callable[[], Tensor]


@dataclass
class GradCheckResult:
    """Outcome of one finite-difference check"""

    name: str
    probes: int
    worst_relative_error: float
    worst_absolute_error: float
    tolerance: float
    passed: bool
    redrawn: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, 1e-8)"""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def noise_floor(loss_value: float, dtype, step: float) -> float:
    """Absolute error a difference quotient cannot resolve at this loss scale"""
    return NOISE_MULTIPLE * float(np.finfo(dtype).eps) * max(abs(loss_value), 1.0) / step


def _quotient(loss_fn: LossFn, tensor: Tensor, index: int, step: float) -> float:
    flat = tensor.data.reshape(-1)
    original = flat[index]
    flat[index] = original + step
    upper = float(flat[index])
    plus = loss_fn().item()
    flat[index] = original - step
    lower = float(flat[index])
    minus = loss_fn().item()
    flat[index] = original
    # the stored step is rounded to the tensor dtype
    return (plus - minus) / (upper - lower)


def _within(a: float, b: float, tolerance: float, floor: float) -> bool:
    return relative_error(a, b) < tolerance or abs(a - b) < floor


def check_gradients(
    name: str,
    loss_fn: LossFn,
    tensors: Sequence[Tensor],
    rng: np.random.Generator,
    probes: int = 20,
    tolerance: Optional[float] = None,
    reference: Optional[Tuple[LossFn, Sequence[Tensor]]] = None,
) -> GradCheckResult:
    """Compare tape gradients against central differences on sampled entries

    `loss_fn` must rebuild the scalar loss from the current contents of
    `tensors` every time it is called. Every tensor gets `probes` uniformly
    drawn entries.

    When `reference` is given, its loss function and tensors (same shapes,
    usually a 64-bit build of the same stage) take the difference quotients
    instead; the working values are copied into them first. An entry passes
    when its relative error is below `tolerance` or its absolute error is
    below the rounding noise of the quotient. An entry whose quotient moves
    when the step is halved sits on a kink and is redrawn; a tensor that
    runs out of attempts fails the check.

    Raises:
        ShapeError: If reference tensors do not match the working tensors
    """
    work_dtype = np.dtype(tensors[0].data.dtype)
    tolerance = TOLERANCES.get(work_dtype.name, TOLERANCES["float32"]) if tolerance is None else tolerance

    for tensor in tensors:
        tensor.requires_grad = True
    with Tape() as tape:
        loss = loss_fn()
        tape.backward(loss)
        analytic: List[np.ndarray] = [g.astype(np.float64) for g in tape.gradients(tensors)]
    tape.clear()

    numeric_fn, numeric_tensors = (loss_fn, tensors) if reference is None else reference
    if len(numeric_tensors) != len(tensors):
        raise ShapeError("check_gradients", (len(numeric_tensors),), (len(tensors),))
    if reference is not None:
        for source, target in zip(tensors, numeric_tensors):
            if source.shape != target.shape:
                raise ShapeError("check_gradients", target.shape, source.shape)
            target.data[...] = source.data

    diff_dtype = np.dtype(numeric_tensors[0].data.dtype)
    step = STEPS.get(diff_dtype.name, STEPS["float32"])
    smooth_tol = TOLERANCES.get(diff_dtype.name, TOLERANCES["float32"])

    worst_rel = 0.0
    worst_abs = 0.0
    passed = True
    accepted_total = 0
    redrawn = 0
    with precision(diff_dtype):
        floor = noise_floor(numeric_fn().item(), diff_dtype, step)
        for slot, tensor in enumerate(numeric_tensors):
            accepted = 0
            attempts = 0
            while accepted < probes and attempts < REDRAW_LIMIT * probes:
                attempts += 1
                index = int(rng.integers(tensor.size))
                numeric = _quotient(numeric_fn, tensor, index, step)
                if not _within(numeric, _quotient(numeric_fn, tensor, index, step / 2), smooth_tol, floor):
                    redrawn += 1
                    continue
                accepted += 1

                exact = float(analytic[slot].reshape(-1)[index])
                rel = relative_error(exact, numeric)
                abs_err = abs(exact - numeric)
                worst_rel = max(worst_rel, rel)
                worst_abs = max(worst_abs, abs_err)
                if rel >= tolerance and abs_err >= floor:
                    passed = False
            if accepted < probes:
                passed = False
            accepted_total += accepted

    return GradCheckResult(name, accepted_total, worst_rel, worst_abs, tolerance, passed, redrawn)
