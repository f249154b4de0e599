"""Differentiable ops.

Each op computes its forward value with numpy and registers an exact adjoint.
Binary elementwise ops follow numpy broadcasting; their adjoints are summed back
to the operand shapes.
"""
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from isap.core.errors import ShapeMismatchError
from isap.diffcore import special
from isap.diffcore.tensor import Tensor, as_tensor, make_node


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _binary(a, b, forward, op: str):
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = forward(a.data, b.data)
    except ValueError as e:
        raise ShapeMismatchError(detail=f"{op}: incompatible shapes {a.shape} and {b.shape} ({e})")
    return a, b, out


def add(a, b) -> Tensor:
    a, b, out = _binary(a, b, np.add, "add")
    return make_node(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b) -> Tensor:
    a, b, out = _binary(a, b, np.subtract, "sub")
    return make_node(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub")


def mul(a, b) -> Tensor:
    a, b, out = _binary(a, b, np.multiply, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return make_node(out, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b, out = _binary(a, b, np.divide, "div")

    def backward(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * a.data / (b.data * b.data), b.shape)

    return make_node(out, (a, b), backward, "div")


def neg(x) -> Tensor:
    x = as_tensor(x)
    return make_node(-x.data, (x,), lambda g: (-g,), "neg")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatchError(detail=f"matmul needs operands of rank >= 2, got {a.shape} and {b.shape}")
    a, b, out = _binary(a, b, np.matmul, "matmul")

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return make_node(out, (a, b), backward, "matmul")


def affine(x, weight, bias) -> Tensor:
    """x @ weight + bias, weight shaped (in, out)."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.shape[-1] != weight.shape[0] or bias.shape != (weight.shape[1],):
        raise ShapeMismatchError(
            detail=f"affine: input {x.shape}, weight {weight.shape}, bias {bias.shape}"
        )
    out = x.data @ weight.data + bias.data

    def backward(g):
        gx = g @ weight.data.T
        flat_x = x.data.reshape(-1, x.shape[-1])
        flat_g = g.reshape(-1, g.shape[-1])
        return gx, flat_x.T @ flat_g, flat_g.sum(axis=0)

    return make_node(out, (x, weight, bias), backward, "affine")


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return make_node(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return make_node(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def _sigmoid(v: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(v))
    return np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = _sigmoid(x.data)
    return make_node(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def softplus(x) -> Tensor:
    x = as_tensor(x)
    y = np.logaddexp(0.0, x.data)
    return make_node(y, (x,), lambda g: (g * _sigmoid(x.data),), "softplus")


def exp(x) -> Tensor:
    x = as_tensor(x)
    y = np.exp(x.data)
    return make_node(y, (x,), lambda g: (g * y,), "exp")


def log(x) -> Tensor:
    x = as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(x.data)
    return make_node(y, (x,), lambda g: (g / x.data,), "log")


def square(x) -> Tensor:
    x = as_tensor(x)
    return make_node(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,), "square")


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    with np.errstate(invalid="ignore"):
        y = np.sqrt(x.data)
    return make_node(y, (x,), lambda g: (g / (2.0 * y),), "sqrt")


def _expand_reduced(g: np.ndarray, shape: tuple, axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a % len(shape) for a in axes)
        g = np.expand_dims(g, tuple(sorted(axes)))
    return np.broadcast_to(g, shape)


def sum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    y = np.sum(x.data, axis=axis, keepdims=keepdims)
    return make_node(y, (x,), lambda g: (_expand_reduced(g, x.shape, axis, keepdims).copy(),), "sum")


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    y = np.mean(x.data, axis=axis, keepdims=keepdims)
    count = x.size // max(y.size, 1) if x.size else 1

    def backward(g):
        return (_expand_reduced(g, x.shape, axis, keepdims) / count,)

    return make_node(y, (x,), backward, "mean")


def norm(x, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Euclidean norm; the adjoint at a zero vector is taken as zero."""
    x = as_tensor(x)
    y = np.sqrt(np.sum(x.data * x.data, axis=axis, keepdims=True))

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        safe = np.where(y > 0, y, 1.0)
        return (np.where(y > 0, g * x.data / safe, 0.0),)

    return make_node(y if keepdims else np.squeeze(y, axis=axis), (x,), backward, "norm")


def logsumexp(x, axis: int = -1, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    m = np.max(x.data, axis=axis, keepdims=True)
    shifted = np.exp(x.data - m)
    total = np.sum(shifted, axis=axis, keepdims=True)
    y = m + np.log(total)
    softmax_ = shifted / total

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * softmax_,)

    return make_node(y if keepdims else np.squeeze(y, axis=axis), (x,), backward, "logsumexp")


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    m = np.max(x.data, axis=axis, keepdims=True)
    lse = m + np.log(np.sum(np.exp(x.data - m), axis=axis, keepdims=True))
    y = x.data - lse
    probs = np.exp(y)

    def backward(g):
        return (g - probs * np.sum(g, axis=axis, keepdims=True),)

    return make_node(y, (x,), backward, "log_softmax")


def softmax(x, axis: int = -1) -> Tensor:
    return exp(log_softmax(x, axis=axis))


def digamma(x) -> Tensor:
    x = as_tensor(x)
    return make_node(special.digamma(x.data), (x,), lambda g: (g * special.trigamma(x.data),), "digamma")


def lgamma(x) -> Tensor:
    x = as_tensor(x)
    return make_node(special.lgamma(x.data), (x,), lambda g: (g * special.digamma(x.data),), "lgamma")


def clamp_max(x, limit: float) -> Tensor:
    x = as_tensor(x)
    keep = x.data <= limit
    return make_node(np.where(keep, x.data, limit), (x,), lambda g: (g * keep,), "clamp_max")


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        y = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeMismatchError(detail=f"reshape {x.shape} -> {tuple(shape)}: {e}")
    return make_node(y, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x, axes: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    inverse = np.argsort(axes)
    return make_node(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose")


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        y = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatchError(detail=f"concat: {e}")
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_node(y, tuple(tensors), backward, "concat")


def index_select(x, indices, axis: int = 0) -> Tensor:
    x = as_tensor(x)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < -x.shape[axis] or indices.max() >= x.shape[axis]):
        raise ShapeMismatchError(detail=f"index_select: index out of range for axis of size {x.shape[axis]}")
    y = np.take(x.data, indices, axis=axis)

    def backward(g):
        out = np.zeros_like(x.data)
        moved = np.moveaxis(out, axis, 0)
        np.add.at(moved, indices, np.moveaxis(g, axis, 0))
        return (out,)

    return make_node(y, (x,), backward, "index_select")


def gather(x, index) -> Tensor:
    """Pick x[..., index[...]] along the last axis (one entry per leading position)."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    if index.shape != x.shape[:-1]:
        raise ShapeMismatchError(detail=f"gather: index shape {index.shape} vs leading shape {x.shape[:-1]}")
    if index.size and (index.min() < 0 or index.max() >= x.shape[-1]):
        raise ShapeMismatchError(detail=f"gather: index out of range for last axis {x.shape[-1]}")
    y = np.take_along_axis(x.data, index[..., None], axis=-1)[..., 0]

    def backward(g):
        out = np.zeros_like(x.data)
        np.put_along_axis(out, index[..., None], g[..., None], axis=-1)
        return (out,)

    return make_node(y, (x,), backward, "gather")


def getitem(x, index) -> Tensor:
    x = as_tensor(x)
    y = np.array(x.data[index], dtype=np.float64)

    def backward(g):
        out = np.zeros_like(x.data)
        np.add.at(out, index, g)
        return (out,)

    return make_node(y, (x,), backward, "getitem")


def batch_norm(
    x,
    gamma,
    beta,
    running_mean: Optional[np.ndarray] = None,
    running_var: Optional[np.ndarray] = None,
    training: bool = True,
    eps: float = 1e-5,
) -> Tensor:
    """Normalise over every axis but the last (features)."""
    x = as_tensor(x)
    axes = tuple(range(x.ndim - 1))
    if training:
        centered = x - mean(x, axis=axes, keepdims=True)
        var = mean(square(centered), axis=axes, keepdims=True)
        normed = centered / sqrt(var + eps)
    else:
        normed = (x - running_mean) / np.sqrt(running_var + eps)
    return normed * gamma + beta


def avg_pool2d(x, kernel: int) -> Tensor:
    """Non-overlapping average pooling over the trailing two (spatial) axes of NCHW input."""
    x = as_tensor(x)
    n, c, h, w = x.shape
    if h % kernel or w % kernel:
        raise ShapeMismatchError(detail=f"avg_pool2d: spatial {h}x{w} not divisible by {kernel}")
    blocks = reshape(x, (n, c, h // kernel, kernel, w // kernel, kernel))
    return mean(blocks, axis=(3, 5))


def _pad(data: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return data
    return np.pad(data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))


def conv2d(x, weight, bias, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation, NCHW input, weight (out, in, k, k)."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    n, c, h, w = x.shape
    o, c_w, k, _ = weight.shape
    if c != c_w:
        raise ShapeMismatchError(detail=f"conv2d: input channels {c} vs weight {weight.shape}")
    padded = _pad(x.data, padding)
    windows = sliding_window_view(padded, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
    w_mat = weight.data.reshape(o, c * k * k)
    out = (cols @ w_mat.T + bias.data).reshape(n, ho, wo, o).transpose(0, 3, 1, 2)

    def backward(g):
        g_mat = g.transpose(0, 2, 3, 1).reshape(n * ho * wo, o)
        g_weight = (g_mat.T @ cols).reshape(weight.shape)
        g_bias = g_mat.sum(axis=0)
        g_cols = (g_mat @ w_mat).reshape(n, ho, wo, c, k, k)
        g_padded = np.zeros_like(padded)
        for i in range(k):
            for j in range(k):
                g_padded[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += (
                    g_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        g_x = g_padded[:, :, padding:padding + h, padding:padding + w] if padding else g_padded
        return g_x, g_weight, g_bias

    return make_node(np.ascontiguousarray(out), (x, weight, bias), backward, "conv2d")


def conv_transpose2d(x, weight, bias, stride: int = 1, padding: int = 0) -> Tensor:
    """Adjoint of conv2d in its input, NCHW input, weight (in, out, k, k)."""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    n, c, h, w = x.shape
    c_w, o, k, _ = weight.shape
    if c != c_w:
        raise ShapeMismatchError(detail=f"conv_transpose2d: input channels {c} vs weight {weight.shape}")
    full_h, full_w = (h - 1) * stride + k, (w - 1) * stride + k
    out_h, out_w = full_h - 2 * padding, full_w - 2 * padding
    if out_h <= 0 or out_w <= 0:
        raise ShapeMismatchError(detail="conv_transpose2d: padding removes the whole output")
    x_mat = x.data.transpose(0, 2, 3, 1).reshape(n * h * w, c)
    w_mat = weight.data.reshape(c, o * k * k)
    cols = (x_mat @ w_mat).reshape(n, h, w, o, k, k)
    full = np.zeros((n, o, full_h, full_w))
    for i in range(k):
        for j in range(k):
            full[:, :, i:i + stride * h:stride, j:j + stride * w:stride] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    out = full[:, :, padding:padding + out_h, padding:padding + out_w] + bias.data[None, :, None, None]

    def backward(g):
        g_full = _pad(g, padding)
        g_cols = np.empty((n, h, w, o, k, k))
        for i in range(k):
            for j in range(k):
                g_cols[:, :, :, :, i, j] = g_full[:, :, i:i + stride * h:stride, j:j + stride * w:stride].transpose(0, 2, 3, 1)
        g_cols_mat = g_cols.reshape(n * h * w, o * k * k)
        g_x = (g_cols_mat @ w_mat.T).reshape(n, h, w, c).transpose(0, 3, 1, 2)
        g_weight = (x_mat.T @ g_cols_mat).reshape(weight.shape)
        g_bias = g.sum(axis=(0, 2, 3))
        return np.ascontiguousarray(g_x), g_weight, g_bias

    return make_node(np.ascontiguousarray(out), (x, weight, bias), backward, "conv_transpose2d")


def maximum_scalar(x, floor: float) -> Tensor:
    x = as_tensor(x)
    keep = x.data >= floor
    return make_node(np.where(keep, x.data, floor), (x,), lambda g: (g * keep,), "maximum_scalar")
