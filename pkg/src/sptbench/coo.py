"""Coordinate-format (COO) sparse tensors and mode-fiber layouts.

A COO tensor of order ``N`` stores one 32-bit index array per mode plus a
value array.  Indices are 0-based everywhere in this package; the ``.tns``
reader/writer does the 1-based conversion at the file boundary.

Values default to 32-bit floats; pass ``dtype=np.float64`` for the 64-bit
mode.  Explicitly stored zeros are legal and are never dropped: the nonzero
pattern is part of the data.
"""
from __future__ import annotations

import dataclasses
from typing import Iterable, Mapping, Sequence

import numpy as np

INDEX_DTYPE = np.int32
DEFAULT_VALUE_DTYPE = np.float32
#: Largest legal dimension size (indices must fit in a signed 32-bit int).
MAX_DIM = 2**31 - 1

_VALUE_DTYPES = (np.float32, np.float64)


@dataclasses.dataclass(frozen=True)
class SortState:
    """Which nonzero ordering a tensor's arrays currently satisfy.

    ``kind`` is one of ``"unsorted"``, ``"lexicographic"`` (with the mode
    permutation that was sorted on, most-significant mode first) or
    ``"morton"`` (with the block size the Z-curve was computed for).
    """

    kind: str = "unsorted"
    mode_order: tuple[int, ...] | None = None
    block_size: int | None = None

    @staticmethod
    def unsorted() -> "SortState":
        return SortState("unsorted")

    @staticmethod
    def lexicographic(mode_order: Sequence[int]) -> "SortState":
        return SortState("lexicographic", tuple(int(m) for m in mode_order))

    @staticmethod
    def natural(order: int) -> "SortState":
        """Lexicographic order with mode 0 most significant."""
        return SortState.lexicographic(range(order))

    @staticmethod
    def morton(block_size: int) -> "SortState":
        return SortState("morton", None, int(block_size))

    def is_natural(self, order: int) -> bool:
        return self.kind == "lexicographic" and self.mode_order == tuple(range(order))


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise ValueError("tensor order must be >= 1")
    for m, d in enumerate(dims):
        if d < 1:
            raise ValueError(f"dimension of mode {m} must be >= 1, got {d}")
        if d > MAX_DIM:
            raise ValueError(
                f"dimension of mode {m} is {d}, which does not fit a 32-bit index"
            )
    return dims


def _check_value_dtype(dtype) -> np.dtype:
    dtype = np.dtype(dtype)
    if dtype.type not in _VALUE_DTYPES:
        raise ValueError(f"value dtype must be float32 or float64, got {dtype}")
    return dtype


@dataclasses.dataclass
class CooTensor:
    """Sparse tensor in coordinate format.

    Parameters
    ----------
    dims:
        Extent of each mode.
    inds:
        Integer array of shape ``(order, nnz)``; row ``m`` holds the mode-``m``
        index of every nonzero.
    vals:
        Value array of shape ``(nnz,)``, float32 or float64.
    sort:
        The ordering the arrays are known to satisfy.  Constructors in this
        package always fill it in truthfully; ``validate`` re-checks it.
    """

    dims: tuple[int, ...]
    inds: np.ndarray
    vals: np.ndarray
    sort: SortState = dataclasses.field(default_factory=SortState.unsorted)

    def __post_init__(self):
        self.dims = _check_dims(self.dims)
        inds = np.ascontiguousarray(np.asarray(self.inds, dtype=INDEX_DTYPE))
        if inds.ndim != 2 or inds.shape[0] != len(self.dims):
            raise ValueError(
                f"inds must have shape (order, nnz) = ({len(self.dims)}, *), "
                f"got {inds.shape}"
            )
        vals = np.ascontiguousarray(np.asarray(self.vals))
        _check_value_dtype(vals.dtype)
        if vals.shape != (inds.shape[1],):
            raise ValueError(
                f"vals must have shape (nnz,) = ({inds.shape[1]},), got {vals.shape}"
            )
        if inds.shape[1]:
            lo = inds.min(axis=1)
            hi = inds.max(axis=1)
            for m, d in enumerate(self.dims):
                if lo[m] < 0 or hi[m] >= d:
                    bad = int(np.argmax((inds[m] < 0) | (inds[m] >= d)))
                    raise ValueError(
                        f"index out of range in mode {m}: coordinate "
                        f"{tuple(int(i) for i in inds[:, bad])} outside dims {self.dims}"
                    )
        self.inds = inds
        self.vals = vals

    # -- basic properties ---------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return self.inds.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.vals.dtype

    def coords(self, j: int) -> tuple[int, ...]:
        """The coordinate tuple of the ``j``-th stored nonzero."""
        return tuple(int(i) for i in self.inds[:, j])

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (
            f"CooTensor(dims={self.dims}, nnz={self.nnz}, dtype={self.dtype.name}, "
            f"sort={self.sort.kind})"
        )


def _natural_lexsort_perm(inds: np.ndarray) -> np.ndarray:
    """Stable permutation sorting columns lexicographically, mode 0 leading."""
    if inds.shape[1] == 0:
        return np.empty(0, dtype=np.int64)
    # np.lexsort treats the *last* key as most significant.
    return np.lexsort(tuple(inds[m] for m in range(inds.shape[0] - 1, -1, -1)))


def _sum_duplicate_columns(inds: np.ndarray, vals: np.ndarray):
    """Merge equal adjacent coordinate columns of a sorted layout, summing values."""
    nnz = inds.shape[1]
    if nnz == 0:
        return inds, vals
    changed = np.any(inds[:, 1:] != inds[:, :-1], axis=0)
    starts = np.concatenate(([0], np.flatnonzero(changed) + 1))
    if starts.size == nnz:
        return inds, vals
    merged = np.add.reduceat(vals.astype(vals.dtype, copy=False), starts)
    return np.ascontiguousarray(inds[:, starts]), merged.astype(vals.dtype, copy=False)


def coo_from_arrays(
    dims: Sequence[int],
    inds: np.ndarray,
    vals: np.ndarray,
    *,
    dtype=None,
) -> CooTensor:
    """Build a COO tensor from raw index/value arrays.

    The rows of ``inds`` are the per-mode index arrays.  Entries are sorted
    into natural lexicographic order and duplicate coordinates are merged by
    summing their values (a resulting exact zero is kept as a stored entry).
    """
    dims = _check_dims(dims)
    inds = np.ascontiguousarray(np.asarray(inds, dtype=INDEX_DTYPE))
    if inds.ndim != 2 or inds.shape[0] != len(dims):
        raise ValueError(
            f"inds must have shape (order, nnz) = ({len(dims)}, *), got {inds.shape}"
        )
    if dtype is None:
        dtype = vals.dtype if isinstance(vals, np.ndarray) else DEFAULT_VALUE_DTYPE
        if np.dtype(dtype).type not in _VALUE_DTYPES:
            dtype = DEFAULT_VALUE_DTYPE
    dtype = _check_value_dtype(dtype)
    vals = np.ascontiguousarray(np.asarray(vals, dtype=dtype))
    if vals.shape != (inds.shape[1],):
        raise ValueError(
            f"vals must have shape (nnz,) = ({inds.shape[1]},), got {vals.shape}"
        )
    perm = _natural_lexsort_perm(inds)
    inds = np.ascontiguousarray(inds[:, perm])
    vals = vals[perm]
    inds, vals = _sum_duplicate_columns(inds, vals)
    return CooTensor(dims, inds, vals, SortState.natural(len(dims)))


def coo_from_entries(
    dims: Sequence[int],
    entries: Iterable[tuple[Sequence[int], float]],
    *,
    dtype=DEFAULT_VALUE_DTYPE,
) -> CooTensor:
    """Build a COO tensor from ``(coordinate, value)`` pairs or a mapping.

    Coordinates are 0-based.  Duplicates are merged by summing; out-of-range
    coordinates raise ``ValueError`` naming the offending entry.

    Example
    -------
    >>> t = coo_from_entries((2, 2, 2), {(1, 1, 1): 1.0})
    >>> t.nnz
    1
    """
    dims = _check_dims(dims)
    if isinstance(entries, Mapping):
        entries = list(entries.items())
    else:
        entries = list(entries)
    order = len(dims)
    inds = np.empty((order, len(entries)), dtype=INDEX_DTYPE)
    vals = np.empty(len(entries), dtype=_check_value_dtype(dtype))
    for j, (coord, value) in enumerate(entries):
        coord = tuple(int(c) for c in coord)
        if len(coord) != order:
            raise ValueError(
                f"entry {j}: coordinate {coord} has {len(coord)} modes, expected {order}"
            )
        for m, (c, d) in enumerate(zip(coord, dims)):
            if not 0 <= c < d:
                raise ValueError(
                    f"entry {j}: coordinate {coord} out of range for dims {dims} "
                    f"(mode {m})"
                )
        inds[:, j] = coord
        vals[j] = value
    return coo_from_arrays(dims, inds, vals, dtype=dtype)


def check_mode_order(order: int, mode_order: Sequence[int]) -> tuple[int, ...]:
    """Validate that ``mode_order`` is a permutation of ``range(order)``."""
    mode_order = tuple(int(m) for m in mode_order)
    if sorted(mode_order) != list(range(order)):
        raise ValueError(
            f"mode order {mode_order} is not a permutation of the {order} modes"
        )
    return mode_order


def lex_sort(t: CooTensor, mode_order: Sequence[int] | None = None) -> CooTensor:
    """Return a copy of ``t`` sorted lexicographically.

    ``mode_order[0]`` is the most significant comparison key.  The default is
    natural order (mode 0 leads).  Sorting only permutes entries; values are
    never touched arithmetically.
    """
    if mode_order is None:
        mode_order = range(t.order)
    mode_order = check_mode_order(t.order, mode_order)
    if t.nnz == 0:
        perm = np.empty(0, dtype=np.int64)
    else:
        perm = np.lexsort(tuple(t.inds[m] for m in reversed(mode_order)))
    return CooTensor(
        t.dims,
        np.ascontiguousarray(t.inds[:, perm]),
        t.vals[perm].copy(),
        SortState.lexicographic(mode_order),
    )


def is_lex_sorted(inds: np.ndarray, mode_order: Sequence[int]) -> bool:
    """True if the columns of ``inds`` are lex-sorted under ``mode_order``."""
    nnz = inds.shape[1]
    if nnz <= 1:
        return True
    prev = np.zeros(nnz - 1, dtype=bool)  # True where prefix strictly less
    for m in mode_order:
        row = inds[m]
        lt = row[:-1] < row[1:]
        gt = row[:-1] > row[1:]
        if np.any(gt & ~prev):
            return False
        prev |= lt
    return True


@dataclasses.dataclass(frozen=True)
class FiberLayout:
    """Run-length layout of the mode-``n`` fibers of a sorted tensor.

    ``fptr`` has ``nfibs + 1`` entries; fiber ``f`` occupies nonzero positions
    ``fptr[f]:fptr[f+1]`` of the tensor it was built from (which was sorted
    with mode ``mode`` as the least significant key).
    """

    mode: int
    nfibs: int
    fptr: np.ndarray

    def __post_init__(self):
        fptr = np.ascontiguousarray(np.asarray(self.fptr, dtype=np.int64))
        object.__setattr__(self, "fptr", fptr)
        if fptr.ndim != 1 or fptr.size != self.nfibs + 1:
            raise ValueError(
                f"fptr must have nfibs + 1 = {self.nfibs + 1} entries, got {fptr.size}"
            )
        if fptr.size and fptr[0] != 0:
            raise ValueError("fptr must start at 0")
        if np.any(np.diff(fptr) <= 0):
            raise ValueError("fptr must be strictly increasing (fibers are nonempty)")


def build_fiber_layout(t: CooTensor, n: int) -> tuple[CooTensor, FiberLayout]:
    """Sort ``t`` so mode-``n`` fibers are contiguous and delimit them.

    The tensor is lex-sorted with mode ``n`` as the least significant key
    (all other modes keep their natural relative order).  Returns the sorted
    copy together with the fiber pointer.  A fiber is a maximal run of
    nonzeros that agree on every mode except ``n``.
    """
    if not 0 <= n < t.order:
        raise ValueError(f"mode {n} out of range for order-{t.order} tensor")
    others = [m for m in range(t.order) if m != n]
    ts = lex_sort(t, others + [n])
    if ts.nnz == 0:
        fptr = np.zeros(1, dtype=np.int64)
        return ts, FiberLayout(n, 0, fptr)
    if others:
        rest = ts.inds[others]
        changed = np.any(rest[:, 1:] != rest[:, :-1], axis=0)
        starts = np.concatenate(([0], np.flatnonzero(changed) + 1))
    else:
        starts = np.zeros(1, dtype=np.int64)
    fptr = np.concatenate((starts, [ts.nnz])).astype(np.int64)
    return ts, FiberLayout(n, starts.size, fptr)
