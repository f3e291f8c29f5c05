"""Structural validation for every sparse representation.

``validate`` returns a list of human-readable violation strings — empty iff
the object satisfies all of its format's invariants.  Each message names the
invariant and the offending position, so corrupted inputs can be located.
"""
from __future__ import annotations

import numpy as np

from .blocked import GHicooTensor, HicooTensor, blocked_full_inds, morton_words
from .coo import CooTensor, FiberLayout, is_lex_sorted
from .semisparse import SemiSparseTensor


def _duplicate_columns(inds: np.ndarray) -> list[int]:
    """Positions (in a sorted copy) whose coordinate equals its predecessor."""
    if inds.shape[1] <= 1:
        return []
    perm = np.lexsort(tuple(inds[m] for m in range(inds.shape[0] - 1, -1, -1)))
    srt = inds[:, perm]
    dup = np.flatnonzero(np.all(srt[:, 1:] == srt[:, :-1], axis=0)) + 1
    return [int(perm[j]) for j in dup]


def _bounds_violations(inds: np.ndarray, dims, what: str) -> list[str]:
    out = []
    for m, d in enumerate(dims):
        if inds.shape[1] == 0:
            continue
        bad = np.flatnonzero((inds[m] < 0) | (inds[m] >= d))
        if bad.size:
            j = int(bad[0])
            out.append(
                f"{what}: mode {m} index {int(inds[m, j])} out of range "
                f"[0, {d}) at position {j}"
            )
    return out


def _morton_rank_violations(coords: np.ndarray, what: str) -> list[str]:
    """Check that columns are in nondecreasing Morton order; report regressions."""
    if coords.shape[1] <= 1:
        return []
    words = morton_words(coords)
    # Compare adjacent codes word-by-word, most significant word first.
    less = np.zeros(coords.shape[1] - 1, dtype=bool)
    greater = np.zeros(coords.shape[1] - 1, dtype=bool)
    for row in range(words.shape[0] - 1, -1, -1):
        a, b = words[row, :-1], words[row, 1:]
        greater |= (a > b) & ~less & ~greater
        less |= (a < b) & ~greater & ~less
    bad = np.flatnonzero(greater)
    if bad.size:
        j = int(bad[0])
        return [f"{what}: Morton order violated between positions {j} and {j + 1}"]
    return []


def _validate_coo(t: CooTensor) -> list[str]:
    v: list[str] = []
    v += _bounds_violations(t.inds, t.dims, "coo indices")
    for j in _duplicate_columns(t.inds):
        v.append(
            f"coo indices: duplicate coordinate "
            f"{tuple(int(i) for i in t.inds[:, j])} at position {j}"
        )
    if t.sort.kind == "lexicographic":
        order = t.sort.mode_order
        if order is None or sorted(order) != list(range(t.order)):
            v.append(f"sort state: invalid lexicographic mode order {order}")
        elif not is_lex_sorted(t.inds, order):
            v.append(
                f"sort state: claims lexicographic order {order} but entries "
                f"are not sorted that way"
            )
    elif t.sort.kind == "morton":
        if t.sort.block_size is None:
            v.append("sort state: morton order requires a block size")
        else:
            v += _morton_rank_violations(t.inds.astype(np.int64), "sort state (morton)")
    elif t.sort.kind != "unsorted":
        v.append(f"sort state: unknown kind {t.sort.kind!r}")
    return v


def _validate_blocked_common(
    bptr, binds, einds, block_size, nnz, what: str
) -> list[str]:
    v: list[str] = []
    n_b = binds.shape[1]
    if bptr[0] != 0:
        v.append(f"{what}: bptr[0] must be 0, got {int(bptr[0])}")
    if bptr[-1] != nnz:
        v.append(f"{what}: bptr[-1] must equal nnz={nnz}, got {int(bptr[-1])}")
    steps = np.diff(bptr)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        v.append(f"{what}: block {int(bad[0])} is empty (bptr not strictly increasing)")
        return v  # element/block partitions are meaningless past this point
    if binds.size and binds.min() < 0:
        row, col = np.unravel_index(int(np.argmin(binds)), binds.shape)
        v.append(f"{what}: negative block index at binds[{row}, {col}]")
    if einds.size:
        over = np.flatnonzero(np.any(einds >= block_size, axis=0))
        if over.size:
            j = int(over[0])
            v.append(
                f"{what}: element offset >= block size {block_size} at position {j}"
            )
    v += _morton_rank_violations(binds.astype(np.int64), f"{what}: block order")
    if n_b > 1:
        same = np.flatnonzero(np.all(binds[:, 1:] == binds[:, :-1], axis=0))
        if same.size:
            b = int(same[0])
            v.append(f"{what}: duplicate block coordinates at blocks {b} and {b + 1}")
    # Within-block element Morton order.
    for b in range(n_b):
        lo, hi = int(bptr[b]), int(bptr[b + 1])
        if hi - lo <= 1:
            continue
        v += _morton_rank_violations(
            einds[:, lo:hi].astype(np.int64), f"{what}: element order in block {b}"
        )
        if v and v[-1].startswith(f"{what}: element order in block {b}"):
            break  # one example is enough
    return v


def _validate_hicoo(h: HicooTensor) -> list[str]:
    v = _validate_blocked_common(
        h.bptr, h.binds, h.einds, h.block_size, h.nnz, "hicoo"
    )
    if not v:
        full = blocked_full_inds(h)
        v += _bounds_violations(full, h.dims, "hicoo coordinates")
        for j in _duplicate_columns(full):
            v.append(
                f"hicoo coordinates: duplicate coordinate "
                f"{tuple(int(i) for i in full[:, j])} at position {j}"
            )
    return v


def _validate_ghicoo(g: GHicooTensor) -> list[str]:
    v = _validate_blocked_common(
        g.bptr, g.binds, g.einds, g.block_size, g.nnz, "ghicoo"
    )
    if not v:
        full = blocked_full_inds(g)
        v += _bounds_violations(full, g.dims, "ghicoo coordinates")
        for j in _duplicate_columns(full):
            v.append(
                f"ghicoo coordinates: duplicate coordinate "
                f"{tuple(int(i) for i in full[:, j])} at position {j}"
            )
    return v


def _validate_semisparse(s: SemiSparseTensor) -> list[str]:
    v: list[str] = []
    sparse_dims = tuple(s.dims[m] for m in s.sparse_modes)
    if s.sparse_format == "coo":
        v += _bounds_violations(s.sinds, sparse_dims, "semisparse indices")
        inds = s.sinds
    else:
        v += _validate_blocked_common(
            s.bptr, s.binds, s.einds, s.block_size, s.nfibs, "semisparse blocks"
        )
        if v:
            return v
        inds = s.sparse_full_inds()
        v += _bounds_violations(inds, sparse_dims, "semisparse coordinates")
    for j in _duplicate_columns(inds):
        v.append(
            f"semisparse: duplicate sparse coordinate "
            f"{tuple(int(i) for i in inds[:, j])} at fiber {j}"
        )
    return v


def _validate_fiber_layout(f: FiberLayout) -> list[str]:
    v: list[str] = []
    if f.fptr[0] != 0:
        v.append(f"fiber layout: fptr[0] must be 0, got {int(f.fptr[0])}")
    bad = np.flatnonzero(np.diff(f.fptr) <= 0)
    if bad.size:
        v.append(f"fiber layout: empty fiber at position {int(bad[0])}")
    return v


def validate(obj) -> list[str]:
    """Check every structural invariant of a sparse object.

    Returns an empty list iff the object is well-formed.  Accepts
    ``CooTensor``, ``HicooTensor``, ``GHicooTensor``, ``SemiSparseTensor``
    and ``FiberLayout``.
    """
    if isinstance(obj, CooTensor):
        return _validate_coo(obj)
    if isinstance(obj, HicooTensor):
        return _validate_hicoo(obj)
    if isinstance(obj, GHicooTensor):
        return _validate_ghicoo(obj)
    if isinstance(obj, SemiSparseTensor):
        return _validate_semisparse(obj)
    if isinstance(obj, FiberLayout):
        return _validate_fiber_layout(obj)
    raise TypeError(f"cannot validate objects of type {type(obj).__name__}")
