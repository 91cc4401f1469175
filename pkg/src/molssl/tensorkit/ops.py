"""Differentiable primitives.

Broadcasting is deliberately narrow: operands of elementwise ops must have the
same shape, or one of them is a scalar, or (for ``add``/``sub``) the right
operand is a row vector added to every row of a matrix. Anything else raises
:class:`ShapeMismatch`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from molssl.errors import ShapeMismatch
from molssl.tensorkit import _kernels
from molssl.tensorkit.tensor import Tensor, as_tensor, record


def _is_scalar(t: Tensor) -> bool:
    return t.data.ndim == 0 or t.data.size == 1 and t.data.ndim <= 1


def _broadcast_kind(op, a: Tensor, b: Tensor, allow_row=False) -> str:
    if a.shape == b.shape:
        return "same"
    if _is_scalar(b):
        return "scalar_b"
    if _is_scalar(a):
        return "scalar_a"
    if allow_row and a.ndim == 2 and b.ndim == 1 and a.shape[1] == b.shape[0]:
        return "row_b"
    raise ShapeMismatch(op, a.shape, b.shape)


def _reduce_to(g: np.ndarray, kind: str, side: str, shape) -> np.ndarray:
    if kind == "same":
        return g
    if kind == f"scalar_{side}":
        return np.asarray(g.sum()).reshape(shape)
    if kind == "row_b" and side == "b":
        return g.sum(axis=0)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    kind = _broadcast_kind("add", a, b, allow_row=True)
    out = a.data + b.data
    sa, sb = a.shape, b.shape
    na, nb = a.requires_grad, b.requires_grad
    return record("add", out, (a, b),
                  lambda g: (_reduce_to(g, kind, "a", sa) if na else None,
                             _reduce_to(g, kind, "b", sb) if nb else None))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    kind = _broadcast_kind("sub", a, b, allow_row=True)
    out = a.data - b.data
    sa, sb = a.shape, b.shape
    na, nb = a.requires_grad, b.requires_grad
    return record("sub", out, (a, b),
                  lambda g: (_reduce_to(g, kind, "a", sa) if na else None,
                             -_reduce_to(g, kind, "b", sb) if nb else None))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    kind = _broadcast_kind("mul", a, b)
    ad, bd = a.data, b.data
    out = ad * bd
    sa, sb = a.shape, b.shape
    na, nb = a.requires_grad, b.requires_grad
    return record("mul", out, (a, b),
                  lambda g: (_reduce_to(g * bd, kind, "a", sa) if na else None,
                             _reduce_to(g * ad, kind, "b", sb) if nb else None))


def scale_rows(x, w) -> Tensor:
    """``x[i, :] * w[i]`` for a matrix ``x`` and a vector ``w``."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 2 or w.ndim != 1 or x.shape[0] != w.shape[0]:
        raise ShapeMismatch("scale_rows", x.shape, w.shape)
    xd, wd = x.data, w.data
    nx, nw = x.requires_grad, w.requires_grad
    return record("scale_rows", xd * wd[:, None], (x, w),
                  lambda g: (g * wd[:, None] if nx else None,
                             np.einsum("ij,ij->i", g, xd) if nw else None))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch("matmul", a.shape, b.shape)
    ad, bd = a.data, b.data
    na, nb = a.requires_grad, b.requires_grad
    return record("matmul", ad @ bd, (a, b),
                  lambda g: (g @ bd.T if na else None, ad.T @ g if nb else None))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return record("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = _sigmoid(x.data)
    return record("sigmoid", s, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    t = np.tanh(x.data)
    return record("tanh", t, (x,), lambda g: (g * (1.0 - t * t),))


def exp(x) -> Tensor:
    x = as_tensor(x)
    e = np.exp(x.data)
    return record("exp", e, (x,), lambda g: (g * e,))


def log(x) -> Tensor:
    x = as_tensor(x)
    xd = x.data
    return record("log", np.log(xd), (x,), lambda g: (g / xd,))


def sum(x, axis: int | None = None) -> Tensor:  # noqa: A001 - mirrors numpy
    x = as_tensor(x)
    shape = x.shape
    out = x.data.sum(axis=axis)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return record("sum", out, (x,), vjp)


def mean(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    n = x.data.size if axis is None else x.shape[axis]
    return mul(sum(x, axis), 1.0 / n)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    return record("reshape", x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    ax = axis % xs[0].ndim
    for x in xs[1:]:
        if x.ndim != xs[0].ndim or any(x.shape[d] != xs[0].shape[d] for d in range(x.ndim) if d != ax):
            raise ShapeMismatch("concat", xs[0].shape, x.shape)
    sizes = [x.shape[ax] for x in xs]
    cuts = np.cumsum(sizes)[:-1]
    out = np.concatenate([x.data for x in xs], axis=ax)
    return record("concat", out, xs, lambda g: tuple(np.split(g, cuts, axis=ax)))


def index_gather(x, index: np.ndarray) -> Tensor:
    """Rows ``x[index]``; the backward pass scatter-adds into ``x``."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)
    n = x.shape[0]
    return record("index_gather", x.data[index], (x,),
                  lambda g: (_kernels.segment_sum(g, index, n),))


def segment_sum(x, segments: np.ndarray, n_segments: int) -> Tensor:
    x = as_tensor(x)
    segments = np.asarray(segments, dtype=np.int64)
    if segments.shape[0] != x.shape[0]:
        raise ShapeMismatch("segment_sum", x.shape, segments.shape)
    out = _kernels.segment_sum(x.data, segments, n_segments)
    return record("segment_sum", out, (x,), lambda g: (g[segments],))


def segment_counts(segments: np.ndarray, n_segments: int) -> np.ndarray:
    return np.bincount(np.asarray(segments, dtype=np.int64), minlength=n_segments).astype(np.float64)


def segment_mean(x, segments: np.ndarray, n_segments: int) -> Tensor:
    x = as_tensor(x)
    segments = np.asarray(segments, dtype=np.int64)
    counts = np.maximum(segment_counts(segments, n_segments), 1.0)
    total = segment_sum(x, segments, n_segments)
    inv = 1.0 / counts
    if x.ndim == 1:
        return mul(total, inv)
    return scale_rows(total, inv)


def segment_softmax(scores, segments: np.ndarray, n_segments: int) -> Tensor:
    """Softmax of a score vector within each segment."""
    s = as_tensor(scores)
    if s.ndim != 1:
        raise ShapeMismatch("segment_softmax", s.shape)
    segments = np.asarray(segments, dtype=np.int64)
    peak = _kernels.segment_max(s.data, segments, n_segments)
    e = np.exp(s.data - peak[segments])
    denom = _kernels.segment_sum(e, segments, n_segments)
    y = e / denom[segments]

    def vjp(g):
        dot = _kernels.segment_sum(g * y, segments, n_segments)
        return (y * (g - dot[segments]),)

    return record("segment_softmax", y, (s,), vjp)


def softmax(x) -> Tensor:
    """Softmax over the last axis."""
    x = as_tensor(x)
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    return record("softmax", y, (x,),
                  lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


def dropout(x, rate: float, rng: np.random.Generator | None, train: bool = True) -> Tensor:
    """Inverted dropout; the identity when ``train`` is false or ``rate`` is 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    if not train or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return record("dropout", x.data * keep, (x,), lambda g: (g * keep,))


def bce_with_logits(logits, targets) -> Tensor:
    """Elementwise binary cross-entropy of ``sigmoid(logits)`` against (soft) targets."""
    z = as_tensor(logits)
    t = np.asarray(targets.data if isinstance(targets, Tensor) else targets, dtype=np.float64)
    if t.shape != z.shape:
        raise ShapeMismatch("bce_with_logits", z.shape, t.shape)
    zd = z.data
    out = np.maximum(zd, 0.0) - zd * t + np.log1p(np.exp(-np.abs(zd)))
    s = _sigmoid(zd)
    return record("bce_with_logits", out, (z,), lambda g: (g * (s - t),))


def squared_error(pred, target) -> Tensor:
    """Elementwise ``(pred - target)**2``; ``target`` is a constant."""
    p = as_tensor(pred)
    t = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    if t.shape != p.shape:
        raise ShapeMismatch("squared_error", p.shape, t.shape)
    diff = p.data - t
    return record("squared_error", diff * diff, (p,), lambda g: (2.0 * g * diff,))


def abs_error(pred, target) -> Tensor:
    p = as_tensor(pred)
    t = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    if t.shape != p.shape:
        raise ShapeMismatch("abs_error", p.shape, t.shape)
    diff = p.data - t
    return record("abs_error", np.abs(diff), (p,), lambda g: (g * np.sign(diff),))


def mse(pred, target) -> Tensor:
    return mean(squared_error(pred, target))
