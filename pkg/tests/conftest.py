"""Shared helpers: random tensor factories and literal reference kernels.

The ``literal_*`` functions are deliberately naive nested-loop
implementations over dense arrays — independent of the package's own dense
oracle, so the oracle itself can be validated against them on tiny inputs
before anything else trusts it.
"""
from __future__ import annotations

import numpy as np
import pytest

from sptbench import CooTensor, SortState, coo_from_arrays


def rand_coo(rng, dims, nnz, dtype=np.float32, values="normal"):
    """Random COO tensor with exactly ``nnz`` distinct coordinates."""
    total = int(np.prod([int(d) for d in dims]))
    if nnz > total:
        raise ValueError(f"cannot place {nnz} distinct nonzeros in {total} cells")
    flat = rng.choice(total, size=nnz, replace=False)
    inds = np.empty((len(dims), nnz), dtype=np.int64)
    rem = flat
    for m in range(len(dims) - 1, -1, -1):
        inds[m] = rem % dims[m]
        rem = rem // dims[m]
    if values == "normal":
        vals = rng.standard_normal(nnz)
    elif values == "uniform":
        vals = 1.0 - rng.random(nnz)  # (0, 1], never exactly zero
    else:
        raise ValueError(values)
    return coo_from_arrays(dims, inds, vals.astype(dtype), dtype=dtype)


def dense_of(t: CooTensor) -> np.ndarray:
    """Independent densification: trusts only the COO field layout."""
    a = np.zeros(t.dims, dtype=np.float64)
    for x in range(t.nnz):
        a[tuple(int(t.inds[m, x]) for m in range(t.order))] += float(t.vals[x])
    return a


def literal_tew(a: np.ndarray, b: np.ndarray, op: str) -> np.ndarray:
    out = np.zeros(a.shape, dtype=np.float64)
    for idx in np.ndindex(a.shape):
        x, y = float(a[idx]), float(b[idx])
        if op == "add":
            out[idx] = x + y
        elif op == "sub":
            out[idx] = x - y
        elif op == "mul":
            out[idx] = x * y
        elif op == "div":
            out[idx] = x / y if x != 0 else 0.0
    return out


def literal_ts(a: np.ndarray, s: float, op: str) -> np.ndarray:
    out = np.zeros(a.shape, dtype=np.float64)
    for idx in np.ndindex(a.shape):
        if a[idx] == 0:
            continue  # sparse semantics: only stored entries are touched
        out[idx] = a[idx] + s if op == "add" else a[idx] * s
    return out


def literal_ttv(a: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    out_shape = a.shape[:n] + a.shape[n + 1:]
    out = np.zeros(out_shape, dtype=np.float64)
    for idx in np.ndindex(a.shape):
        out_idx = idx[:n] + idx[n + 1:]
        out[out_idx] += float(a[idx]) * float(v[idx[n]])
    return out


def literal_ttm(a: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    rank = u.shape[1]
    out_shape = a.shape[:n] + (rank,) + a.shape[n + 1:]
    out = np.zeros(out_shape, dtype=np.float64)
    for idx in np.ndindex(a.shape):
        for r in range(rank):
            out_idx = idx[:n] + (r,) + idx[n + 1:]
            out[out_idx] += float(a[idx]) * float(u[idx[n], r])
    return out


def literal_mttkrp(a: np.ndarray, factors, n: int) -> np.ndarray:
    rank = factors[0].shape[1]
    out = np.zeros((a.shape[n], rank), dtype=np.float64)
    other_modes = [m for m in range(a.ndim) if m != n]
    for idx in np.ndindex(a.shape):
        for r in range(rank):
            prod = float(a[idx])
            for f, m in zip(factors, other_modes):
                prod *= float(f[idx[m], r])
            out[idx[n], r] += prod
    return out


def assert_close(actual, desired, rtol):
    """Relative comparison scaled by the largest reference magnitude."""
    desired = np.asarray(desired, dtype=np.float64)
    scale = float(np.max(np.abs(desired))) if desired.size else 0.0
    np.testing.assert_allclose(
        np.asarray(actual, dtype=np.float64), desired,
        rtol=rtol, atol=rtol * max(scale, 1e-30),
    )


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile every jit path once so individual tests time cleanly."""
    from sptbench.kernels import warmup

    warmup(np.float32)
    warmup(np.float64)
