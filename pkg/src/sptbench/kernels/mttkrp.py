"""Matricized-tensor times Khatri-Rao product (MTTKRP).

For mode ``n``, every nonzero scales the Hadamard product of one row from
each other mode's factor matrix and accumulates into row ``inds[n]`` of the
output.  The COO path parallelizes over nonzeros and the HiCOO path over
blocks (factor rows addressed as ``block index * B + element offset``).

Different workers can hit the same output row, so the parallel strategy is
privatization: each worker chunk accumulates into its own output copy and
the copies are summed in worker order afterwards.  That makes results
bitwise reproducible at a fixed worker count; across worker counts they
agree to rounding.  ``strategy="serial"`` forces one chunk regardless of
``workers``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..blocked import HicooTensor
from ..coo import CooTensor
from ..runtime import chunk_bounds, numba_threads, resolve_workers
from . import _loops

STRATEGIES = ("privatized", "serial")


def mttkrp(
    t,
    factors: Sequence[np.ndarray],
    n: int,
    *,
    workers: int | None = None,
    strategy: str = "privatized",
    counter=None,
) -> np.ndarray:
    """MTTKRP along mode ``n`` of a COO or HiCOO tensor.

    ``factors`` holds one ``(dims[m], R)`` matrix per mode ``m != n`` in
    ascending mode order.  Returns a dense ``(dims[n], R)`` array in the
    tensor's value dtype.
    """
    if not isinstance(t, (CooTensor, HicooTensor)):
        raise TypeError(f"mttkrp takes a CooTensor or HicooTensor, got {type(t).__name__}")
    order = t.order
    if order < 2:
        raise ValueError(f"mttkrp needs an order >= 2 tensor, got order {order}")
    n = int(n)
    if not 0 <= n < order:
        raise ValueError(f"mode {n} out of range for an order-{order} tensor")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    others = [m for m in range(order) if m != n]
    factors = list(factors)
    if len(factors) != len(others):
        raise ValueError(
            f"expected {len(others)} factor matrices (one per mode != {n}), "
            f"got {len(factors)}"
        )
    factors = [np.ascontiguousarray(np.asarray(f, dtype=t.dtype)) for f in factors]
    ranks = {f.shape[1] if f.ndim == 2 else -1 for f in factors}
    if len(ranks) != 1 or -1 in ranks:
        raise ValueError("factor matrices must be 2-D with a common column count R")
    rank = ranks.pop()
    if rank < 1:
        raise ValueError("factor matrices must have at least one column")
    for m, f in zip(others, factors):
        if f.shape[0] != t.dims[m]:
            raise ValueError(
                f"factor for mode {m} must have shape ({t.dims[m]}, R), got {f.shape}"
            )
    # Stack the factors row-wise so the jit loop can address any of them.
    fcat = (
        np.vstack(factors)
        if factors
        else np.empty((0, rank), dtype=t.dtype)
    )
    rowoff = np.zeros(order, dtype=np.int64)
    off = 0
    for m, f in zip(others, factors):
        rowoff[m] = off
        off += f.shape[0]
    workers = resolve_workers(workers)
    nchunks = 1 if strategy == "serial" else workers
    out_rows = t.dims[n]
    if isinstance(t, CooTensor):
        nchunks = max(1, min(nchunks, max(1, t.nnz)))
        chunks = chunk_bounds(t.nnz, nchunks)
        out_priv = np.zeros((nchunks, out_rows, rank), dtype=t.dtype)
        tmp = np.empty((nchunks, rank), dtype=t.dtype)
        with numba_threads(workers):
            _loops.mttkrp_coo(t.inds, t.vals, fcat, rowoff, n, out_priv, tmp, chunks)
    else:
        nchunks = max(1, min(nchunks, max(1, t.n_b)))
        chunks = chunk_bounds(t.n_b, nchunks)
        out_priv = np.zeros((nchunks, out_rows, rank), dtype=t.dtype)
        tmp = np.empty((nchunks, rank), dtype=t.dtype)
        with numba_threads(workers):
            _loops.mttkrp_blocked(
                t.bptr, t.binds, t.einds, t.vals, fcat, rowoff, n,
                np.int64(t.block_size), out_priv, tmp, chunks,
            )
    if counter is not None:
        counter.add(3 * t.nnz * rank)
    if nchunks == 1:
        return out_priv[0]
    return out_priv.sum(axis=0, dtype=t.dtype)
