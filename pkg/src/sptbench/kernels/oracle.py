"""Dense 64-bit reference implementations of the five kernels.

These evaluate the defining equations directly on dense arrays and exist to
check the sparse kernels, never to be fast.  Everything is computed in
float64 regardless of the sparse tensor's value precision.

``to_dense`` refuses to materialize tensors above a cell-count cap so a typo
in a test can't try to allocate a terabyte.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..blocked import GHicooTensor, HicooTensor, blocked_full_inds
from ..coo import CooTensor
from ..semisparse import SemiSparseTensor

#: Refuse to densify tensors with more cells than this.
DEFAULT_DENSE_CAP = 10_000_000

_MODE_LETTERS = "abcdefghijklmnop"


def to_dense(t, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Materialize any sparse representation as a dense float64 array."""
    ncells = math.prod(t.dims)
    if ncells > cap:
        raise ValueError(
            f"refusing to densify {t.dims} = {ncells} cells (cap {cap}); "
            f"raise cap explicitly if this is intended"
        )
    out = np.zeros(t.dims, dtype=np.float64)
    if isinstance(t, CooTensor):
        out[tuple(t.inds)] = t.vals.astype(np.float64)
        return out
    if isinstance(t, (HicooTensor, GHicooTensor)):
        out[tuple(blocked_full_inds(t))] = t.vals.astype(np.float64)
        return out
    if isinstance(t, SemiSparseTensor):
        axes = t.sparse_modes + t.dense_modes
        view = np.transpose(out, axes)
        dense_extents = tuple(t.dims[m] for m in t.dense_modes)
        view[tuple(t.sparse_full_inds())] = t.vals.astype(np.float64).reshape(
            (t.nfibs,) + dense_extents
        )
        return out
    raise TypeError(f"cannot densify objects of type {type(t).__name__}")


def dense_tew(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    """Dense elementwise reference.

    Division applies the dividend's nonzero pattern: cells where ``a`` is
    zero stay zero, so ``b`` only needs nonzero values on ``a``'s pattern.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        out = np.zeros_like(a)
        np.divide(a, b, out=out, where=(a != 0))
        return out
    raise ValueError(f"unknown elementwise op {op!r}")


def dense_ts(a: np.ndarray, s: float, op: str, pattern: np.ndarray | None = None) -> np.ndarray:
    """Dense tensor-scalar reference over a nonzero pattern.

    The sparse kernel touches stored entries only, so scalar addition needs
    the pattern; it defaults to ``a != 0`` (pass the exact pattern when the
    sparse operand stores explicit zeros).
    """
    a = np.asarray(a, dtype=np.float64)
    if pattern is None:
        pattern = a != 0
    if op == "add":
        return np.where(pattern, a + float(s), 0.0)
    if op == "mul":
        return a * float(s)
    raise ValueError(f"tensor-scalar op must be 'add' or 'mul', got {op!r}")


def dense_ttv(t: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    """Dense tensor-times-vector along mode ``n`` (order drops by one)."""
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (t.shape[n],):
        raise ValueError(f"vector must have shape ({t.shape[n]},), got {v.shape}")
    return np.tensordot(t, v, axes=([n], [0]))


def dense_ttm(t: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """Dense tensor-times-matrix along mode ``n``.

    ``u`` has shape ``(t.shape[n], R)`` (mode extent down the rows); the
    result replaces mode ``n`` with an extent-``R`` mode.
    """
    t = np.asarray(t, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != t.shape[n]:
        raise ValueError(f"matrix must have shape ({t.shape[n]}, R), got {u.shape}")
    return np.moveaxis(np.tensordot(t, u, axes=([n], [0])), -1, n)


def dense_mttkrp(t: np.ndarray, factors: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Dense matricized-tensor-times-Khatri-Rao-product along mode ``n``.

    ``factors`` holds one ``(t.shape[m], R)`` matrix per mode ``m != n`` in
    ascending mode order.  Result has shape ``(t.shape[n], R)``.
    """
    t = np.asarray(t, dtype=np.float64)
    order = t.ndim
    if order > len(_MODE_LETTERS):
        raise ValueError(f"order {order} tensors are not supported")
    others = [m for m in range(order) if m != n]
    if len(factors) != len(others):
        raise ValueError(
            f"expected {len(others)} factor matrices (modes != {n}), got {len(factors)}"
        )
    factors = [np.asarray(f, dtype=np.float64) for f in factors]
    ranks = {f.shape[1] for f in factors} if factors else set()
    if len(ranks) > 1:
        raise ValueError(f"factor matrices disagree on R: {sorted(ranks)}")
    for m, f in zip(others, factors):
        if f.ndim != 2 or f.shape[0] != t.shape[m]:
            raise ValueError(
                f"factor for mode {m} must have shape ({t.shape[m]}, R), got {f.shape}"
            )
    modes = _MODE_LETTERS[:order]
    subs = [modes] + [f"{modes[m]}r" for m in others]
    return np.einsum(",".join(subs) + f"->{modes[n]}r", t, *factors)


def oracle(kernel: str, **operands) -> np.ndarray:
    """Dispatch to the dense reference for ``kernel``.

    Expected operands: ``tew(a, b, op)``, ``ts(a, s, op[, pattern])``,
    ``ttv(t, v, n)``, ``ttm(t, u, n)``, ``mttkrp(t, factors, n)``.
    """
    table = {
        "tew": dense_tew,
        "ts": dense_ts,
        "ttv": dense_ttv,
        "ttm": dense_ttm,
        "mttkrp": dense_mttkrp,
    }
    if kernel not in table:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {sorted(table)}")
    return table[kernel](**operands)
