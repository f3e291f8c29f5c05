"""Numba inner loops for the five kernels.

Each loop mirrors the obvious shared-memory parallelization: one writer per
output element (elementwise ops), one writer per fiber (TTV/TTM), or one
private accumulator per worker chunk (MTTKRP).  Results therefore depend on
the requested worker partition, never on the thread schedule, and repeated
runs at a fixed worker count are bitwise identical.

Opcode numbering: 0 add, 1 sub, 2 mul, 3 div.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange

OP_ADD, OP_SUB, OP_MUL, OP_DIV = 0, 1, 2, 3

# Error codes returned by the pattern merge.
MERGE_OK = 0
MERGE_MISSING = 1  # divisor has no entry at one of the dividend's coordinates
MERGE_ZERO = 2     # divisor entry is exactly zero


@njit(cache=True, parallel=True)
def ew_fused(xv, yv, opcode, out):  # pragma: no cover - jit
    """Elementwise op over two identical nonzero patterns."""
    for i in prange(xv.size):
        if opcode == OP_ADD:
            out[i] = xv[i] + yv[i]
        elif opcode == OP_SUB:
            out[i] = xv[i] - yv[i]
        elif opcode == OP_MUL:
            out[i] = xv[i] * yv[i]
        else:
            out[i] = xv[i] / yv[i]


@njit(cache=True)
def _col_cmp(a, ja, b, jb):  # pragma: no cover - jit
    for m in range(a.shape[0]):
        va = a[m, ja]
        vb = b[m, jb]
        if va < vb:
            return -1
        if va > vb:
            return 1
    return 0


@njit(cache=True)
def ew_merge(xinds, xv, yinds, yv, opcode, out_inds, out_vals):  # pragma: no cover - jit
    """Sorted two-pointer merge of two differing nonzero patterns.

    Index rows must be pre-permuted into comparison significance order (most
    significant row first); both operands sorted accordingly.  Union
    semantics for add/sub (absent entries read as zero), intersection for
    mul, dividend pattern for div.  Returns ``(out_nnz, flops, err_pos,
    err_code)`` where ``err_pos`` indexes the dividend's nonzeros.
    """
    nx = xv.size
    ny = yv.size
    i = 0
    j = 0
    k = 0
    flops = 0
    if opcode == OP_ADD or opcode == OP_SUB:
        while i < nx and j < ny:
            c = _col_cmp(xinds, i, yinds, j)
            if c < 0:
                for m in range(xinds.shape[0]):
                    out_inds[m, k] = xinds[m, i]
                out_vals[k] = xv[i]
                i += 1
            elif c > 0:
                for m in range(yinds.shape[0]):
                    out_inds[m, k] = yinds[m, j]
                if opcode == OP_SUB:
                    out_vals[k] = -yv[j]
                    flops += 1
                else:
                    out_vals[k] = yv[j]
                j += 1
            else:
                for m in range(xinds.shape[0]):
                    out_inds[m, k] = xinds[m, i]
                if opcode == OP_SUB:
                    out_vals[k] = xv[i] - yv[j]
                else:
                    out_vals[k] = xv[i] + yv[j]
                flops += 1
                i += 1
                j += 1
            k += 1
        while i < nx:
            for m in range(xinds.shape[0]):
                out_inds[m, k] = xinds[m, i]
            out_vals[k] = xv[i]
            i += 1
            k += 1
        while j < ny:
            for m in range(yinds.shape[0]):
                out_inds[m, k] = yinds[m, j]
            if opcode == OP_SUB:
                out_vals[k] = -yv[j]
                flops += 1
            else:
                out_vals[k] = yv[j]
            j += 1
            k += 1
        return k, flops, -1, MERGE_OK
    if opcode == OP_MUL:
        while i < nx and j < ny:
            c = _col_cmp(xinds, i, yinds, j)
            if c < 0:
                i += 1
            elif c > 0:
                j += 1
            else:
                for m in range(xinds.shape[0]):
                    out_inds[m, k] = xinds[m, i]
                out_vals[k] = xv[i] * yv[j]
                flops += 1
                i += 1
                j += 1
                k += 1
        return k, flops, -1, MERGE_OK
    # Division: dividend pattern, divisor looked up per entry.
    while i < nx:
        while j < ny and _col_cmp(yinds, j, xinds, i) < 0:
            j += 1
        if j >= ny or _col_cmp(yinds, j, xinds, i) != 0:
            return k, flops, i, MERGE_MISSING
        if yv[j] == 0:
            return k, flops, i, MERGE_ZERO
        for m in range(xinds.shape[0]):
            out_inds[m, k] = xinds[m, i]
        out_vals[k] = xv[i] / yv[j]
        flops += 1
        i += 1
        k += 1
    return k, flops, -1, MERGE_OK


@njit(cache=True, parallel=True)
def scalar_op(xv, s, opcode, out):  # pragma: no cover - jit
    """Scalar add/multiply over the stored values."""
    for i in prange(xv.size):
        if opcode == OP_ADD:
            out[i] = xv[i] + s
        else:
            out[i] = xv[i] * s


@njit(cache=True, parallel=True)
def ttv_fibers(fptr, mode_inds, vals, v, out):  # pragma: no cover - jit
    """Contract each fiber with the vector: one writer per fiber."""
    for f in prange(out.size):
        acc = out[f]
        for x in range(fptr[f], fptr[f + 1]):
            acc += vals[x] * v[mode_inds[x]]
        out[f] = acc


@njit(cache=True, parallel=True)
def ttm_fibers(fptr, mode_inds, vals, u, out):  # pragma: no cover - jit
    """Contract each fiber with the matrix into its dense output chunk."""
    rank = u.shape[1]
    for f in prange(out.shape[0]):
        for x in range(fptr[f], fptr[f + 1]):
            val = vals[x]
            k = mode_inds[x]
            for r in range(rank):
                out[f, r] += val * u[k, r]


@njit(cache=True, parallel=True)
def mttkrp_coo(inds, vals, fcat, rowoff, n, out_priv, tmp, chunks):  # pragma: no cover - jit
    """MTTKRP over nonzeros, one private output copy per worker chunk.

    ``fcat`` stacks the factor matrices row-wise; ``rowoff[m]`` is the row
    offset of mode ``m``'s factor inside it (unused for ``m == n``).
    """
    nworkers = chunks.size - 1
    nmodes = inds.shape[0]
    rank = fcat.shape[1]
    for w in prange(nworkers):
        for x in range(chunks[w], chunks[w + 1]):
            val = vals[x]
            for r in range(rank):
                tmp[w, r] = val
            for m in range(nmodes):
                if m == n:
                    continue
                row = rowoff[m] + inds[m, x]
                for r in range(rank):
                    tmp[w, r] *= fcat[row, r]
            i = inds[n, x]
            for r in range(rank):
                out_priv[w, i, r] += tmp[w, r]


@njit(cache=True, parallel=True)
def mttkrp_blocked(bptr, binds, einds, vals, fcat, rowoff, n, bsize, out_priv, tmp, chunks):  # pragma: no cover - jit
    """MTTKRP over blocks: per-block factor row bases, private output copies."""
    nworkers = chunks.size - 1
    nmodes = binds.shape[0]
    rank = fcat.shape[1]
    for w in prange(nworkers):
        for b in range(chunks[w], chunks[w + 1]):
            ibase = np.int64(binds[n, b]) * bsize
            for x in range(bptr[b], bptr[b + 1]):
                val = vals[x]
                for r in range(rank):
                    tmp[w, r] = val
                for m in range(nmodes):
                    if m == n:
                        continue
                    row = rowoff[m] + np.int64(binds[m, b]) * bsize + einds[m, x]
                    for r in range(rank):
                        tmp[w, r] *= fcat[row, r]
                i = ibase + einds[n, x]
                for r in range(rank):
                    out_priv[w, i, r] += tmp[w, r]
