"""Tensor-elementwise (TEW) and tensor-scalar (TS) kernels.

TEW on two tensors with the same nonzero pattern is a fused loop over the
value arrays.  Differing patterns go through a sorted merge with the usual
set semantics: union for add/sub (absent entries read as zero), intersection
for mul, and the dividend's pattern for div — every dividend entry must find
a nonzero divisor value or the kernel raises.

Blocked (HiCOO) operands with identical structure reuse the fused loop and
keep the block structure; differing structures fall back to a COO merge and
re-block the result.

TS applies ``add`` or ``mul`` with a scalar to the stored values; the
pattern is preserved exactly, including entries that become zero.
"""
from __future__ import annotations

import numpy as np

from ..blocked import GHicooTensor, HicooTensor, from_hicoo, to_hicoo
from ..coo import CooTensor, SortState
from ..runtime import numba_threads, resolve_workers
from . import _loops
from ._loops import MERGE_MISSING, MERGE_ZERO, OP_ADD, OP_DIV, OP_MUL, OP_SUB

ELEMENTWISE_OPS = ("add", "sub", "mul", "div")
SCALAR_OPS = ("add", "mul")

_OPCODES = {"add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV}


def _opcode(op: str, allowed) -> int:
    if op not in allowed:
        raise ValueError(f"op must be one of {allowed}, got {op!r}")
    return _OPCODES[op]


def _count(counter, n) -> None:
    if counter is not None:
        counter.add(n)


def _check_same_dims(x, y) -> None:
    if x.dims != y.dims:
        raise ValueError(f"operand shape mismatch: {x.dims} vs {y.dims}")
    if x.dtype != y.dtype:
        raise ValueError(f"operand dtype mismatch: {x.dtype} vs {y.dtype}")


def _require_common_lex_order(x: CooTensor, y: CooTensor) -> tuple[int, ...]:
    if x.sort.kind != "lexicographic" or y.sort.kind != "lexicographic":
        raise ValueError(
            "tew requires both operands lex-sorted (run lex_sort first); got "
            f"{x.sort.kind!r} and {y.sort.kind!r}"
        )
    if x.sort.mode_order != y.sort.mode_order:
        raise ValueError(
            f"tew operands are sorted in different mode orders: "
            f"{x.sort.mode_order} vs {y.sort.mode_order}"
        )
    return x.sort.mode_order


def _raise_div_error(coord: tuple[int, ...], code: int) -> None:
    if code == MERGE_MISSING:
        raise ValueError(
            f"division needs a divisor entry at every dividend coordinate; "
            f"missing at {coord}"
        )
    raise ValueError(f"division by a zero divisor value at {coord}")


def _tew_coo(x: CooTensor, y: CooTensor, op: str, workers, counter) -> CooTensor:
    _check_same_dims(x, y)
    opcode = _opcode(op, ELEMENTWISE_OPS)
    mode_order = _require_common_lex_order(x, y)
    workers = resolve_workers(workers)
    if np.array_equal(x.inds, y.inds):
        if opcode == OP_DIV and x.nnz:
            zero = np.flatnonzero(y.vals == 0)
            if zero.size:
                _raise_div_error(x.coords(int(zero[0])), MERGE_ZERO)
        out = np.empty_like(x.vals)
        with numba_threads(workers):
            _loops.ew_fused(x.vals, y.vals, opcode, out)
        _count(counter, x.nnz)
        return CooTensor(x.dims, x.inds.copy(), out, x.sort)
    # Differing patterns: sorted merge in the shared significance order.
    sig = list(mode_order)
    xs = np.ascontiguousarray(x.inds[sig])
    ys = np.ascontiguousarray(y.inds[sig])
    if opcode in (OP_ADD, OP_SUB):
        worst = x.nnz + y.nnz
    elif opcode == OP_MUL:
        worst = min(x.nnz, y.nnz)
    else:
        worst = x.nnz
    out_sig = np.empty((x.order, worst), dtype=x.inds.dtype)
    out_vals = np.empty(worst, dtype=x.dtype)
    nout, flops, err_pos, err_code = _loops.ew_merge(
        xs, x.vals, ys, y.vals, opcode, out_sig, out_vals
    )
    if err_code != 0:
        _raise_div_error(x.coords(int(err_pos)), err_code)
    _count(counter, flops)
    inds = np.empty((x.order, nout), dtype=x.inds.dtype)
    for row, m in enumerate(mode_order):
        inds[m] = out_sig[row, :nout]
    return CooTensor(x.dims, inds, out_vals[:nout].copy(), x.sort)


def _same_block_structure(x: HicooTensor, y: HicooTensor) -> bool:
    return (
        x.block_size == y.block_size
        and np.array_equal(x.bptr, y.bptr)
        and np.array_equal(x.binds, y.binds)
        and np.array_equal(x.einds, y.einds)
    )


def _tew_hicoo(x: HicooTensor, y: HicooTensor, op: str, workers, counter) -> HicooTensor:
    _check_same_dims(x, y)
    opcode = _opcode(op, ELEMENTWISE_OPS)
    workers = resolve_workers(workers)
    if _same_block_structure(x, y):
        if opcode == OP_DIV and x.nnz:
            zero = np.flatnonzero(y.vals == 0)
            if zero.size:
                from ..blocked import blocked_full_inds

                coord = tuple(int(i) for i in blocked_full_inds(x)[:, int(zero[0])])
                _raise_div_error(coord, MERGE_ZERO)
        out = np.empty_like(x.vals)
        with numba_threads(workers):
            _loops.ew_fused(x.vals, y.vals, opcode, out)
        _count(counter, x.nnz)
        return HicooTensor(
            x.dims, x.block_size, x.bptr.copy(), x.binds.copy(), x.einds.copy(), out
        )
    # Structures differ: merge in COO space and re-block the result.
    merged = _tew_coo(from_hicoo(x), from_hicoo(y), op, workers, counter)
    return to_hicoo(merged, x.block_size)


def tew(x, y, op: str, *, workers: int | None = None, counter=None):
    """Elementwise combine two sparse tensors of the same shape.

    ``op`` is one of ``add``, ``sub``, ``mul``, ``div``.  Both operands must
    be ``CooTensor`` (lex-sorted the same way) or both ``HicooTensor``; the
    output matches the input representation.  Identical patterns keep their
    ordering and pattern; merges produce the set-semantics pattern in the
    operands' sort order.
    """
    if isinstance(x, CooTensor) and isinstance(y, CooTensor):
        return _tew_coo(x, y, op, workers, counter)
    if isinstance(x, HicooTensor) and isinstance(y, HicooTensor):
        return _tew_hicoo(x, y, op, workers, counter)
    raise TypeError(
        f"tew operands must both be CooTensor or both HicooTensor, got "
        f"{type(x).__name__} and {type(y).__name__}"
    )


def ts(x, s: float, op: str, *, workers: int | None = None, counter=None):
    """Combine every stored value with the scalar ``s`` (``add`` or ``mul``).

    Works on COO, HiCOO and gHiCOO tensors; structure and pattern are
    preserved exactly (multiplying by zero keeps explicit zero entries).
    """
    opcode = _opcode(op, SCALAR_OPS)
    if not isinstance(x, (CooTensor, HicooTensor, GHicooTensor)):
        raise TypeError(f"ts does not support {type(x).__name__}")
    workers = resolve_workers(workers)
    scalar = x.dtype.type(s)
    out = np.empty_like(x.vals)
    with numba_threads(workers):
        _loops.scalar_op(x.vals, scalar, opcode, out)
    _count(counter, x.nnz)
    if isinstance(x, CooTensor):
        return CooTensor(x.dims, x.inds.copy(), out, x.sort)
    if isinstance(x, HicooTensor):
        return HicooTensor(
            x.dims, x.block_size, x.bptr.copy(), x.binds.copy(), x.einds.copy(), out
        )
    return GHicooTensor(
        x.dims,
        x.block_size,
        x.compressed_modes,
        x.bptr.copy(),
        x.binds.copy(),
        x.einds.copy(),
        x.uinds.copy(),
        out,
    )
