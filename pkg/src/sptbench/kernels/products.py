"""Tensor-times-vector (TTV) and tensor-times-matrix (TTM) kernels.

Both kernels share a pre-processing step that makes mode-``n`` fibers
contiguous and counts them; because a sparse tensor contracted with a dense
operand keeps exactly one output entry per fiber, the output's pattern (and
its blocked structure, for gHiCOO inputs) is fully determined before any
value is computed.  ``ttv_prep``/``ttm_prep`` expose that step so a harness
can keep it out of the timed region; the kernel itself only fills values.

For gHiCOO inputs the product mode must be uncompressed.  The natural layout
(all modes but ``n`` compressed) runs directly on the stored order and emits
the output in HiCOO; other layouts are handled by expanding to COO during
pre-processing and re-blocking the output, which is slower but identical in
value.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from ..blocked import (
    GHicooTensor,
    HicooTensor,
    _blocked_arrays,
    from_hicoo,
)
from ..coo import CooTensor, SortState, build_fiber_layout
from ..runtime import numba_threads, resolve_workers
from ..semisparse import SemiSparseTensor
from . import _loops


@dataclasses.dataclass
class ProductPrep:
    """Everything TTV/TTM need besides the dense operand.

    ``fptr``/``mode_inds``/``vals`` describe the fibers of the (possibly
    re-ordered) input; the ``out_*`` fields hold the precomputed output
    pattern.  ``out_perm`` permutes per-fiber results into the blocked
    output order when those differ (COO-expanded gHiCOO inputs).
    """

    mode: int
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    fptr: np.ndarray
    mode_inds: np.ndarray
    vals: np.ndarray
    out_kind: str  # "coo" | "hicoo"
    out_inds: np.ndarray | None = None
    out_perm: np.ndarray | None = None
    out_bptr: np.ndarray | None = None
    out_binds: np.ndarray | None = None
    out_einds: np.ndarray | None = None
    block_size: int | None = None

    @property
    def nfibs(self) -> int:
        return self.fptr.size - 1

    @property
    def nnz(self) -> int:
        return int(self.fptr[-1]) if self.fptr.size else 0


def _check_mode(order: int, n: int) -> int:
    n = int(n)
    if order < 2:
        raise ValueError(f"mode products need an order >= 2 tensor, got order {order}")
    if not 0 <= n < order:
        raise ValueError(f"mode {n} out of range for an order-{order} tensor")
    return n


def _operand_order(t) -> int:
    if not isinstance(t, (CooTensor, GHicooTensor)):
        raise TypeError(
            f"mode products take a CooTensor or GHicooTensor, got {type(t).__name__}"
        )
    return t.order


def _coo_prep(t: CooTensor, n: int) -> ProductPrep:
    ts, layout = build_fiber_layout(t, n)
    others = [m for m in range(t.order) if m != n]
    starts = layout.fptr[:-1]
    out_inds = np.ascontiguousarray(ts.inds[others][:, starts])
    return ProductPrep(
        mode=n,
        in_dims=t.dims,
        out_dims=tuple(t.dims[m] for m in others),
        fptr=layout.fptr,
        mode_inds=np.ascontiguousarray(ts.inds[n]),
        vals=ts.vals,
        out_kind="coo",
        out_inds=out_inds,
    )


def _ghicoo_fast_prep(g: GHicooTensor, n: int) -> ProductPrep:
    # Stored order is (Morton over the non-n modes, then mode n): fibers are
    # the maximal runs with equal block id and equal element offsets.
    blk = g.block_of_nonzero()
    if g.nnz == 0:
        starts = np.empty(0, dtype=np.int64)
    else:
        change = blk[1:] != blk[:-1]
        if g.einds.shape[0]:
            change = change | np.any(g.einds[:, 1:] != g.einds[:, :-1], axis=0)
        starts = np.concatenate(([0], np.flatnonzero(change) + 1))
    fptr = np.concatenate((starts, [g.nnz])).astype(np.int64)
    fiber_blk = blk[starts] if starts.size else np.empty(0, dtype=np.int64)
    fiber_einds = np.ascontiguousarray(g.einds[:, starts])
    if fiber_blk.size:
        bchange = fiber_blk[1:] != fiber_blk[:-1]
        bstarts = np.concatenate(([0], np.flatnonzero(bchange) + 1))
    else:
        bstarts = np.empty(0, dtype=np.int64)
    out_bptr = np.concatenate((bstarts, [starts.size])).astype(np.int64)
    out_binds = np.ascontiguousarray(g.binds[:, fiber_blk[bstarts]]) if bstarts.size else np.empty(
        (g.binds.shape[0], 0), dtype=g.binds.dtype
    )
    others = [m for m in range(g.order) if m != n]
    return ProductPrep(
        mode=n,
        in_dims=g.dims,
        out_dims=tuple(g.dims[m] for m in others),
        fptr=fptr,
        mode_inds=np.ascontiguousarray(g.uinds[0]),
        vals=g.vals,
        out_kind="hicoo",
        out_bptr=out_bptr,
        out_binds=out_binds,
        out_einds=fiber_einds,
        block_size=g.block_size,
    )


def _ghicoo_general_prep(g: GHicooTensor, n: int) -> ProductPrep:
    # Uncommon layouts (extra uncompressed modes): expand, prep as COO, and
    # precompute the blocking of the output fibers.
    prep = _coo_prep(from_hicoo(g), n)
    skeleton = CooTensor(
        prep.out_dims,
        prep.out_inds,
        np.zeros(prep.out_inds.shape[1], dtype=g.dtype),
        SortState.natural(len(prep.out_dims)),
    )
    modes = tuple(range(skeleton.order))
    perm, bptr, binds, einds = _blocked_arrays(skeleton, modes, g.block_size)
    prep.out_kind = "hicoo"
    prep.out_inds = None
    prep.out_perm = perm
    prep.out_bptr = bptr
    prep.out_binds = binds
    prep.out_einds = einds
    prep.block_size = g.block_size
    return prep


def product_prep(t, n: int) -> ProductPrep:
    """Pre-process a COO or gHiCOO tensor for mode-``n`` TTV/TTM.

    Sorting, fiber counting and output-pattern construction all happen here,
    so the kernels proper touch values only.
    """
    if isinstance(t, CooTensor):
        n = _check_mode(t.order, n)
        return _coo_prep(t, n)
    if isinstance(t, GHicooTensor):
        n = _check_mode(t.order, n)
        if n in t.compressed_modes:
            raise ValueError(
                f"mode {n} is block-compressed; gHiCOO products need the "
                f"product mode stored uncompressed (compressed modes: "
                f"{t.compressed_modes})"
            )
        if t.uncompressed_modes == (n,):
            return _ghicoo_fast_prep(t, n)
        return _ghicoo_general_prep(t, n)
    raise TypeError(
        f"mode products take a CooTensor or GHicooTensor, got {type(t).__name__}"
    )


ttv_prep = product_prep
ttm_prep = product_prep


def _check_prep(t, n: int, prep: ProductPrep | None) -> ProductPrep:
    if prep is None:
        return product_prep(t, n)
    if prep.mode != n or prep.in_dims != t.dims:
        raise ValueError(
            f"prep was built for mode {prep.mode} of dims {prep.in_dims}, "
            f"not mode {n} of dims {t.dims}"
        )
    return prep


def _count(counter, n) -> None:
    if counter is not None:
        counter.add(n)


def ttv(t, v: np.ndarray, n: int, *, prep: ProductPrep | None = None,
        workers: int | None = None, counter=None):
    """Contract mode ``n`` of a sparse tensor with a dense vector.

    Returns an order ``N - 1`` tensor: COO for COO input, HiCOO for gHiCOO
    input.  The output has exactly one entry per mode-``n`` fiber; entries
    whose contraction is zero are kept (the pattern is decided by structure,
    not by values).
    """
    n = _check_mode(_operand_order(t), n)
    prep = _check_prep(t, n, prep)
    v = np.ascontiguousarray(np.asarray(v, dtype=t.dtype))
    if v.shape != (t.dims[n],):
        raise ValueError(f"vector must have shape ({t.dims[n]},), got {v.shape}")
    workers = resolve_workers(workers)
    out_vals = np.zeros(prep.nfibs, dtype=t.dtype)
    with numba_threads(workers):
        _loops.ttv_fibers(prep.fptr, prep.mode_inds, prep.vals, v, out_vals)
    _count(counter, 2 * prep.nnz)
    if prep.out_kind == "coo":
        return CooTensor(
            prep.out_dims,
            prep.out_inds.copy(),
            out_vals,
            SortState.natural(len(prep.out_dims)),
        )
    if prep.out_perm is not None:
        out_vals = out_vals[prep.out_perm]
    return HicooTensor(
        prep.out_dims,
        prep.block_size,
        prep.out_bptr,
        prep.out_binds,
        prep.out_einds,
        out_vals,
    )


def ttm(t, u: np.ndarray, n: int, *, prep: ProductPrep | None = None,
        workers: int | None = None, counter=None) -> SemiSparseTensor:
    """Contract mode ``n`` of a sparse tensor with a dense matrix.

    ``u`` has shape ``(dims[n], R)``.  The result is semi-sparse: mode ``n``
    becomes a dense extent-``R`` mode holding one length-``R`` chunk per
    surviving fiber, while the other modes stay sparse (COO-indexed for COO
    input, block-indexed for gHiCOO input).
    """
    n = _check_mode(_operand_order(t), n)
    prep = _check_prep(t, n, prep)
    u = np.ascontiguousarray(np.asarray(u, dtype=t.dtype))
    if u.ndim != 2 or u.shape[0] != t.dims[n]:
        raise ValueError(f"matrix must have shape ({t.dims[n]}, R), got {u.shape}")
    rank = u.shape[1]
    if rank < 1:
        raise ValueError("matrix must have at least one column")
    workers = resolve_workers(workers)
    out_vals = np.zeros((prep.nfibs, rank), dtype=t.dtype)
    with numba_threads(workers):
        _loops.ttm_fibers(prep.fptr, prep.mode_inds, prep.vals, u, out_vals)
    _count(counter, 2 * prep.nnz * rank)
    out_dims = list(t.dims)
    out_dims[n] = rank
    if prep.out_kind == "coo":
        return SemiSparseTensor(
            tuple(out_dims), (n,), out_vals, sinds=prep.out_inds.copy()
        )
    if prep.out_perm is not None:
        out_vals = out_vals[prep.out_perm]
    return SemiSparseTensor(
        tuple(out_dims),
        (n,),
        out_vals,
        bptr=prep.out_bptr,
        binds=prep.out_binds,
        einds=prep.out_einds,
        block_size=prep.block_size,
    )
