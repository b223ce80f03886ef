"""
Differentiable primitives

Each primitive computes its forward value with numpy and, when a tape is
active, records a backward rule mapping the upstream gradient to one
gradient per input. Backward rules are module-level functions looked up at
call time.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigurationError, NumericError, ShapeError
from .tensor import Tensor, active_tape, default_dtype

Operand = Union[Tensor, float, int, np.ndarray]


def _lift(value: Operand) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=default_dtype()))


def _emit(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data, dtype=np.asarray(data).dtype)
    tape = active_tape()
    if tape is not None:
        tape.record(op, out, inputs, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to an operand's shape"""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


# Elementwise arithmetic ---------------------------------------------------

def add(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("add", a, b)
    return _emit("add", a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def _mul_backward(g: np.ndarray, a: Tensor, b: Tensor):
    return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b), lambda g: _mul_backward(g, a, b))


def _div_backward(g: np.ndarray, a: Tensor, b: Tensor):
    ga = g / b.data
    gb = -g * a.data / (b.data * b.data)
    return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("div", a, b)
    return _emit("div", a.data / b.data, (a, b), lambda g: _div_backward(g, a, b))


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a Python scalar"""
    a = _lift(a)
    c = a.data.dtype.type(factor)
    return _emit("scale", a.data * c, (a,), lambda g: (g * c,))


# Nonlinearities -----------------------------------------------------------

def _relu_backward(g: np.ndarray, mask: np.ndarray):
    return (g * mask,)


def relu(a: Operand) -> Tensor:
    a = _lift(a)
    mask = a.data > 0
    out = np.where(mask, a.data, a.data.dtype.type(0))
    return _emit("relu", out, (a,), lambda g: _relu_backward(g, mask))


def _sigmoid_backward(g: np.ndarray, out: np.ndarray):
    return (g * out * (1 - out),)


def sigmoid(a: Operand) -> Tensor:
    a = _lift(a)
    # exp only ever sees -|x|: no overflow, and negative inputs keep their tail
    one = a.data.dtype.type(1)
    tail = np.exp(-np.abs(a.data))
    out = np.where(a.data >= 0, one / (one + tail), tail / (one + tail))
    return _emit("sigmoid", out, (a,), lambda g: _sigmoid_backward(g, out))


def _softmax_backward(g: np.ndarray, out: np.ndarray, axis: int):
    return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)


def softmax(a: Operand, axis: int = -1) -> Tensor:
    """Max-stabilized softmax along one axis

    Raises:
        NumericError: If any logit is NaN or infinite
    """
    a = _lift(a)
    if a.ndim == 0 or a.shape[axis] < 1:
        raise ShapeError("softmax", a.shape)
    if not np.all(np.isfinite(a.data)):
        raise NumericError(f"softmax: non-finite logits in tensor of shape {a.shape}")
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    exps = np.exp(shifted)
    out = exps / np.sum(exps, axis=axis, keepdims=True)
    return _emit("softmax", out, (a,), lambda g: _softmax_backward(g, out, axis))


def _l2norm_backward(g: np.ndarray, x: np.ndarray, norm: np.ndarray, keepdims: bool):
    if not keepdims:
        g = g[..., None]
    # zero subgradient where the norm vanishes
    unit = np.divide(x, norm, out=np.zeros_like(x), where=norm > 0)
    return (g * unit,)


def l2norm(a: Operand, keepdims: bool = False) -> Tensor:
    """Euclidean norm along the last axis"""
    a = _lift(a)
    if a.ndim == 0 or a.shape[-1] < 1:
        raise ShapeError("l2norm", a.shape)
    norm = np.sqrt(np.sum(a.data * a.data, axis=-1, keepdims=True))
    out = norm if keepdims else norm[..., 0]
    return _emit("l2norm", out, (a,), lambda g: _l2norm_backward(g, a.data, norm, keepdims))


# Reductions and shape -----------------------------------------------------

def _normalize_axes(axis, ndim: int) -> Optional[Tuple[int, ...]]:
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(ax % ndim for ax in axes)


def _sum_backward(g: np.ndarray, shape: Tuple[int, ...], axes: Optional[Tuple[int, ...]], keepdims: bool):
    if axes is not None and not keepdims:
        g = np.expand_dims(g, axes)
    return (np.broadcast_to(g, shape),)


def sum(a: Operand, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = _lift(a)
    axes = _normalize_axes(axis, a.ndim)
    out = np.sum(a.data, axis=axes, keepdims=keepdims)
    return _emit("sum", np.asarray(out, dtype=a.data.dtype), (a,),
                 lambda g: _sum_backward(g, a.shape, axes, keepdims))


def mean(a: Operand, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    axes = _normalize_axes(axis, a.ndim)
    count = a.size if axes is None else int(np.prod([a.shape[ax] for ax in axes]))
    return scale(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a: Operand, shape: Sequence[int]) -> Tensor:
    a = _lift(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(shape)) from None
    return _emit("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Operand, axes: Sequence[int]) -> Tensor:
    a = _lift(a)
    axes = tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError("transpose", a.shape, axes)
    inverse = tuple(np.argsort(axes))
    return _emit("transpose", np.ascontiguousarray(np.transpose(a.data, axes)), (a,),
                 lambda g: (np.transpose(g, inverse),))


def expand_dims(a: Operand, axis: int) -> Tensor:
    a = _lift(a)
    return reshape(a, np.expand_dims(a.data, axis).shape)


# Linear algebra -----------------------------------------------------------

def _matmul_backward(g: np.ndarray, a: Tensor, b: Tensor):
    ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
    gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
    return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)


def matmul(a: Operand, b: Operand) -> Tensor:
    """Batched matrix product over the last two axes"""
    a, b = _lift(a), _lift(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", a.shape, b.shape)
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError("matmul", a.shape, b.shape) from None
    return _emit("matmul", out, (a, b), lambda g: _matmul_backward(g, a, b))


def _mse_backward(g: np.ndarray, diff: np.ndarray):
    grad = g * (2.0 / diff.size) * diff
    return grad.astype(diff.dtype, copy=False), (-grad).astype(diff.dtype, copy=False)


def mse(a: Operand, b: Operand) -> Tensor:
    """Mean squared error over every element"""
    a, b = _lift(a), _lift(b)
    if a.shape != b.shape:
        raise ShapeError("mse", a.shape, b.shape)
    diff = a.data - b.data
    out = np.asarray(np.mean(diff * diff), dtype=diff.dtype)
    return _emit("mse", out, (a, b), lambda g: _mse_backward(g, diff))


# Convolution --------------------------------------------------------------

def conv_output_shape(height: int, width: int, kh: int, kw: int, stride: int) -> Tuple[int, int]:
    return (height - kh) // stride + 1, (width - kw) // stride + 1


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, out_h: int, out_w: int) -> np.ndarray:
    """Patch matrix of shape (C*kh*kw, B*out_h*out_w)"""
    batch, channels = x.shape[:2]
    sb, sc, sh, sw = x.strides
    patches = np.lib.stride_tricks.as_strided(
        x,
        shape=(channels, kh, kw, batch, out_h, out_w),
        strides=(sc, sh, sw, sb, stride * sh, stride * sw),
        writeable=False,
    )
    return patches.reshape(channels * kh * kw, batch * out_h * out_w)


def _col2im(cols: np.ndarray, x_shape: Tuple[int, ...], kh: int, kw: int, stride: int,
            out_h: int, out_w: int) -> np.ndarray:
    batch, channels, height, width = x_shape
    image = np.zeros((batch, channels, height, width), dtype=cols.dtype)
    cols = cols.reshape(channels, kh, kw, batch, out_h, out_w).transpose(3, 0, 1, 2, 4, 5)
    for i in range(kh):
        rows = slice(i, i + stride * out_h, stride)
        for j in range(kw):
            image[:, :, rows, j:j + stride * out_w:stride] += cols[:, :, i, j]
    return image


def _conv2d_backward(g: np.ndarray, x: Tensor, kernels: Tensor, cols: np.ndarray, stride: int):
    n_kernels, _, kh, kw = kernels.shape
    out_h, out_w = g.shape[2:]
    g_flat = g.transpose(1, 0, 2, 3).reshape(n_kernels, -1)
    k_flat = kernels.data.reshape(n_kernels, -1)
    grad_kernels = (g_flat @ cols.T).reshape(kernels.shape)
    grad_input = _col2im(k_flat.T @ g_flat, x.shape, kh, kw, stride, out_h, out_w)
    return grad_input, grad_kernels


def conv2d(x: Tensor, kernels: Tensor, stride: int = 1) -> Tensor:
    """Valid (unpadded) 2-D cross-correlation

    Args:
        x: Input of shape [B, C, H, W]
        kernels: Kernels of shape [K, C, kh, kw]
        stride: Step between windows in both directions

    Raises:
        ConfigurationError: On mismatched shapes or a kernel larger than the input
    """
    x, kernels = _lift(x), _lift(kernels)
    if stride < 1:
        raise ConfigurationError(f"conv2d: stride must be positive, got {stride}")
    if x.ndim != 4 or kernels.ndim != 4 or x.shape[1] != kernels.shape[1]:
        raise ShapeError("conv2d", x.shape, kernels.shape)
    batch = x.shape[0]
    n_kernels, _, kh, kw = kernels.shape
    out_h, out_w = conv_output_shape(x.shape[2], x.shape[3], kh, kw, stride)
    if out_h < 1 or out_w < 1:
        raise ShapeError("conv2d", x.shape, kernels.shape)

    cols = np.ascontiguousarray(_im2col(x.data, kh, kw, stride, out_h, out_w))
    out = kernels.data.reshape(n_kernels, -1) @ cols
    out = np.ascontiguousarray(out.reshape(n_kernels, batch, out_h, out_w).transpose(1, 0, 2, 3))
    return _emit("conv2d", out, (x, kernels), lambda g: _conv2d_backward(g, x, kernels, cols, stride))
