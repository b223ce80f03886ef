"""
Dense tensors and the reverse-mode differentiation tape

A Tensor wraps a contiguous numpy array. Operations executed while a Tape is
active append one node per primitive to that tape; `Tape.backward` replays the
nodes in reverse recording order, which is a reverse topological order
because every node's inputs were produced before it.
"""

import contextvars
import itertools
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import UsageError

_DTYPE: contextvars.ContextVar = contextvars.ContextVar("capsnet_dtype", default=np.float32)
_ACTIVE_TAPE: contextvars.ContextVar = contextvars.ContextVar("capsnet_tape", default=None)


def default_dtype() -> type:
    """Floating point type new tensors are created with"""
    return _DTYPE.get()


@contextmanager
def precision(dtype) -> Iterator[None]:
    """Create tensors in the given float type inside the block

    The 64-bit mode exists to tighten gradient-check tolerances; training runs
    in 32-bit.
    """
    token = _DTYPE.set(np.dtype(dtype).type)
    try:
        yield
    finally:
        _DTYPE.reset(token)


def active_tape() -> Optional["Tape"]:
    return _ACTIVE_TAPE.get()


@dataclass(frozen=True)
class Handle:
    """Position of a tensor on a particular tape"""

    tape_serial: int
    index: int


class Tensor:
    """Dense n-dimensional array that can take part in differentiation"""

    __slots__ = ("data", "requires_grad", "grad_id", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        array = np.asarray(data, dtype=dtype or default_dtype())
        self.data: np.ndarray = np.ascontiguousarray(array)
        self.requires_grad = requires_grad
        self.grad_id: Optional[Handle] = None
        self.name = name

    @classmethod
    def zeros(cls, shape: Sequence[int], **kwargs) -> "Tensor":
        dtype = kwargs.pop("dtype", None) or default_dtype()
        return cls(np.zeros(tuple(shape), dtype=dtype), dtype=dtype, **kwargs)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    # Operators delegate to the primitives in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        flag = " requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label}{flag})"


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class _Node:
    op: str
    output: int
    inputs: Tuple[Optional[int], ...]
    backward: BackwardFn


class Tape:
    """Ordered record of primitive operations and their gradient buffers

    Use as a context manager; operations inside the block are recorded on
    this tape. A tape belongs to the thread that entered it.
    """

    _serials = itertools.count(1)

    def __init__(self):
        self.serial = next(Tape._serials)
        self._retired: set = set()
        self._nodes: List[_Node] = []
        self._shapes: List[Tuple[int, ...]] = []
        self._grads: Dict[int, np.ndarray] = {}
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    def _check_handle(self, handle: Handle) -> None:
        if handle.tape_serial in self._retired:
            raise UsageError("Tensor handle belongs to a cleared tape")

    def _new_handle(self, tensor: Tensor) -> int:
        index = len(self._shapes)
        self._shapes.append(tensor.shape)
        tensor.grad_id = Handle(self.serial, index)
        return index

    def _track(self, tensor: Tensor) -> Optional[int]:
        handle = tensor.grad_id
        if handle is not None and handle.tape_serial == self.serial:
            return handle.index
        if tensor.requires_grad:
            return self._new_handle(tensor)
        return None

    def record(self, op: str, output: Tensor, inputs: Sequence[Tensor], backward: BackwardFn) -> None:
        """Append a primitive if any of its inputs is differentiable"""
        handles = tuple(self._track(t) for t in inputs)
        if all(h is None for h in handles):
            return
        self._nodes.append(_Node(op, self._new_handle(output), handles, backward))

    def backward(self, loss: Tensor) -> None:
        """Propagate d(loss)/d(node) to every node on the tape

        Raises:
            UsageError: If loss is not a scalar produced on this tape
        """
        if loss.size != 1:
            raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")
        handle = loss.grad_id
        if handle is None or handle.tape_serial != self.serial:
            if handle is not None:
                self._check_handle(handle)
            raise UsageError("backward() loss was not produced on this tape")

        grads: Dict[int, np.ndarray] = {handle.index: np.ones_like(loss.data)}
        for node in reversed(self._nodes):
            upstream = grads.get(node.output)
            if upstream is None:
                continue
            for index, grad in zip(node.inputs, node.backward(upstream)):
                if index is None or grad is None:
                    continue
                if index in grads:
                    grads[index] = grads[index] + grad
                else:
                    grads[index] = grad
        self._grads = grads

    def gradient(self, tensor: Tensor) -> np.ndarray:
        """Gradient buffer of a tensor after backward()

        Tensors the loss does not depend on, including parameters never used
        on this tape, get zeros.
        """
        handle = tensor.grad_id
        if handle is not None:
            self._check_handle(handle)
        if handle is None or handle.tape_serial != self.serial or handle.index not in self._grads:
            return np.zeros_like(tensor.data)
        grad = self._grads[handle.index]
        if grad.shape != tensor.shape:
            grad = np.broadcast_to(grad, tensor.shape)
        return np.ascontiguousarray(grad, dtype=tensor.data.dtype)

    def gradients(self, tensors: Sequence[Tensor]) -> List[np.ndarray]:
        return [self.gradient(t) for t in tensors]

    def clear(self) -> None:
        """Free all nodes and buffers; earlier handles become invalid"""
        self._retired.add(self.serial)
        self.serial = next(Tape._serials)
        self._nodes = []
        self._shapes = []
        self._grads = {}
