"""Minimal reverse-mode autodiff over numpy arrays.

A recorded operation tape: each op produces a Tensor holding its value, its
parents and a closure that routes the output gradient to them. Everything
runs in float64; structured ops (gather/scatter/segment) go through the
kernels module so the compiled backend accelerates both passes.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, parents=(),
                 backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents: tuple[Tensor, ...] = tuple(parents)
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self) -> None:
        if self.data.shape != ():
            raise ValueError("backward() expects a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones((), dtype=np.float64)
        for node in reversed(topo):
            if node.backward_fn is not None and node.grad is not None:
                node.backward_fn(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to ``shape``."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.data.shape))
    out.backward_fn = backward
    return out


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(-g, b.data.shape))
    out.backward_fn = backward
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.data.shape))
    out.backward_fn = backward
    return out


def scale(a, s: float) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data * s, parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * s)
    out.backward_fn = backward
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ g)
    out.backward_fn = backward
    return out


def transpose(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.T, parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g.T)
    out.backward_fn = backward
    return out


# ---------------------------------------------------------------------------
# nonlinearities and normalizations
# ---------------------------------------------------------------------------

def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    out = Tensor(np.where(mask, a.data, 0.0), parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * mask)
    out.backward_fn = backward
    return out


def leaky_relu(a, slope: float = 0.01) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    out = Tensor(np.where(mask, a.data, slope * a.data), parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * np.where(mask, 1.0, slope))
    out.backward_fn = backward
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(s, parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g * s * (1.0 - s))
    out.backward_fn = backward
    return out


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Row-wise layer normalization with scale/shift."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_std
    out = Tensor(xhat * gamma.data + beta.data, parents=(x, gamma, beta))

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate(_unbroadcast((g * xhat).sum(axis=0), gamma.data.shape))
        if beta.requires_grad:
            beta.accumulate(_unbroadcast(g.sum(axis=0), beta.data.shape))
        if x.requires_grad:
            dxhat = g * gamma.data
            m1 = dxhat.mean(axis=-1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
            x.accumulate(inv_std * (dxhat - m1 - xhat * m2))
    out.backward_fn = backward
    return out


def l2_normalize_rows(x) -> Tensor:
    x = as_tensor(x)
    norms = np.linalg.norm(x.data, axis=-1, keepdims=True)
    y = x.data / norms
    out = Tensor(y, parents=(x,))

    def backward(g):
        if x.requires_grad:
            dot = (g * y).sum(axis=-1, keepdims=True)
            x.accumulate((g - y * dot) / norms)
    out.backward_fn = backward
    return out


def log_softmax_rows(x) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - lse
    out = Tensor(y, parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate(g - np.exp(y) * g.sum(axis=-1, keepdims=True))
    out.backward_fn = backward
    return out


# ---------------------------------------------------------------------------
# structure ops
# ---------------------------------------------------------------------------

def gather(x, idx) -> Tensor:
    """Row gather: out[i] = x[idx[i]] (embedding lookup and node selection)."""
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    out = Tensor(kernels.gather_rows(x.data, idx), parents=(x,))

    def backward(g):
        if x.requires_grad:
            acc = np.zeros_like(x.data)
            kernels.scatter_add_rows(acc, idx, np.ascontiguousarray(g))
            x.accumulate(acc)
    out.backward_fn = backward
    return out


def scatter_add(x, idx, n_out: int) -> Tensor:
    """out[idx[i]] += x[i] over n_out rows."""
    x = as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    data = np.zeros((n_out, x.data.shape[1]), dtype=np.float64)
    kernels.scatter_add_rows(data, idx, np.ascontiguousarray(x.data))
    out = Tensor(data, parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate(kernels.gather_rows(np.ascontiguousarray(g), idx))
    out.backward_fn = backward
    return out


def neighbor_aggregate(h, src, dst, edge_feat) -> Tensor:
    """out[v] = sum over edges e with dst[e]==v of (h[src[e]] + edge_feat[e]).

    The message-passing hot kernel; fused in the compiled backend.
    """
    h, edge_feat = as_tensor(h), as_tensor(edge_feat)
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    data = kernels.neighbor_aggregate(h.data, src, dst, edge_feat.data)
    out = Tensor(data, parents=(h, edge_feat))

    def backward(g):
        g = np.ascontiguousarray(g)
        per_edge = kernels.gather_rows(g, dst)
        if edge_feat.requires_grad:
            edge_feat.accumulate(per_edge)
        if h.requires_grad:
            acc = np.zeros_like(h.data)
            kernels.scatter_add_rows(acc, src, per_edge)
            h.accumulate(acc)
    out.backward_fn = backward
    return out


def segment_mean(x, seg, n_seg: int) -> Tensor:
    """Mean of x's rows per segment id; rows with seg < 0 are ignored.
    Empty segments yield zero rows."""
    x = as_tensor(x)
    seg = np.asarray(seg, dtype=np.int64)
    valid = seg >= 0
    counts = np.bincount(seg[valid], minlength=n_seg).astype(np.float64)
    sums = np.zeros((n_seg, x.data.shape[1]), dtype=np.float64)
    kernels.scatter_add_rows(sums, seg[valid],
                             np.ascontiguousarray(x.data[valid]))
    safe = np.maximum(counts, 1.0)[:, None]
    out = Tensor(sums / safe, parents=(x,))

    def backward(g):
        if x.requires_grad:
            acc = np.zeros_like(x.data)
            scaled = np.ascontiguousarray(g / safe)
            acc[valid] = kernels.gather_rows(scaled, seg[valid])
            x.accumulate(acc)
    out.backward_fn = backward
    return out


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    na = a.data.shape[1]
    out = Tensor(np.concatenate([a.data, b.data], axis=1), parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g[:, :na])
        if b.requires_grad:
            b.accumulate(g[:, na:])
    out.backward_fn = backward
    return out


def diag(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.diagonal(a.data).copy(), parents=(a,))

    def backward(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            np.fill_diagonal(acc, g)
            a.accumulate(acc)
    out.backward_fn = backward
    return out


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(), parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(np.full_like(a.data, g))
    out.backward_fn = backward
    return out


def mean_all(a) -> Tensor:
    a = as_tensor(a)
    n = a.data.size
    out = Tensor(a.data.mean(), parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(np.full_like(a.data, g / n))
    out.backward_fn = backward
    return out


def mean_rows(a) -> Tensor:
    """Column-wise mean over all rows (global mean pooling)."""
    a = as_tensor(a)
    n = a.data.shape[0]
    out = Tensor(a.data.mean(axis=0), parents=(a,))

    def backward(g):
        if a.requires_grad:
            a.accumulate(np.broadcast_to(g / n, a.data.shape))
    out.backward_fn = backward
    return out


def stopgrad(a) -> Tensor:
    """Pass the value, block the gradient."""
    a = as_tensor(a)
    return Tensor(a.data.copy())


def dropout(a, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when rate is 0 or rng is None (eval)."""
    a = as_tensor(a)
    if rate <= 0.0 or rng is None:
        return a
    mask = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return mul(a, Tensor(mask))


def bce_with_logits(logits, targets) -> Tensor:
    """Mean binary cross-entropy over all entries, numerically stable."""
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    z = logits.data
    loss = np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))
    out = Tensor(loss.mean(), parents=(logits,))

    def backward(g):
        if logits.requires_grad:
            s = 1.0 / (1.0 + np.exp(-z))
            logits.accumulate(g * (s - t) / z.size)
    out.backward_fn = backward
    return out
