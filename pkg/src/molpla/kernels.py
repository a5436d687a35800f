"""Backend selection for the numeric hot kernels.

The compiled extension (`molpla._fastkernels`, Cython) is used when
importable; otherwise a pure-numpy fallback takes over. Set MOLPLA_PURE=1
to force the fallback. Both backends accumulate in the same order, so
training artifacts are bitwise identical either way.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_PURE = os.environ.get("MOLPLA_PURE", "") not in ("", "0")

try:  # pragma: no cover - exercised via BACKEND assertions in tests
    if _FORCE_PURE:
        raise ImportError("forced pure backend")
    from . import _fastkernels as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = None
    BACKEND = "pure"


def _as_c64(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _as_i64(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def scatter_add_rows(out: np.ndarray, idx: np.ndarray, src: np.ndarray) -> np.ndarray:
    """In-place out[idx[i]] += src[i]; returns out."""
    if _impl is not None:
        _impl.scatter_add_rows(out, _as_i64(idx), _as_c64(src))
    else:
        np.add.at(out, idx, src)
    return out


def gather_rows(src: np.ndarray, idx: np.ndarray) -> np.ndarray:
    if _impl is not None:
        return _impl.gather_rows(_as_c64(src), _as_i64(idx))
    return src[idx].astype(np.float64, copy=True)


def neighbor_aggregate(h: np.ndarray, src: np.ndarray, dst: np.ndarray,
                       edge_feat: np.ndarray) -> np.ndarray:
    """Per-node neighbor sum: out[v] = sum over edges e with dst[e]==v of
    (h[src[e]] + edge_feat[e])."""
    if _impl is not None:
        return _impl.neighbor_aggregate(_as_c64(h), _as_i64(src), _as_i64(dst),
                                        _as_c64(edge_feat))
    out = np.zeros_like(h)
    if len(src):
        np.add.at(out, dst, h[src] + edge_feat)
    return out
