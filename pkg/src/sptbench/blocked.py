"""Blocked sparse formats: HiCOO and its generalization gHiCOO.

HiCOO tiles the coordinate space into aligned cubes of side ``B`` (a power of
two up to 256) and stores, per nonzero, only the 8-bit offset within its
block; block coordinates are stored once per block.  Blocks follow the Morton
(Z-curve) order of their coordinates, and nonzeros within a block follow the
Morton order of their offsets — both fall out of a single sort on the
bit-interleaved full coordinates, because the block bits are exactly the high
bits of each coordinate.

gHiCOO compresses only a chosen subset of the modes this way and keeps a full
32-bit per-nonzero index array for each remaining mode.  ``to_ghicoo`` with
every mode compressed produces the same layout as ``to_hicoo``.
"""
from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np
from numba import njit

from .coo import (
    INDEX_DTYPE,
    CooTensor,
    SortState,
    _check_dims,
    _check_value_dtype,
    lex_sort,
)

BIND_DTYPE = np.int32
EIND_DTYPE = np.uint8
BPTR_DTYPE = np.int64

#: Block sides must be powers of two so offsets are bit slices of coordinates.
VALID_BLOCK_SIZES = (1, 2, 4, 8, 16, 32, 64, 128, 256)

_COORD_BITS = 32


def check_block_size(block_size: int) -> int:
    block_size = int(block_size)
    if block_size not in VALID_BLOCK_SIZES:
        raise ValueError(
            f"block size must be a power of two in [1, 256], got {block_size}"
        )
    return block_size


@njit(cache=True)
def _interleave_bits(coords, max_bits, out):  # pragma: no cover - jit
    """Bit-interleave coordinate rows into little-endian uint64 words.

    ``coords`` is ``(nmodes, n)`` int64 with entries below ``2**max_bits``;
    ``out`` is ``(nwords, n)`` uint64, zeroed by the caller.  Bit ``b`` of
    mode ``m`` lands at global position ``b * nmodes + (nmodes - 1 - m)``
    counted from the least significant end, i.e. mode 0 is the most
    significant mode within each bit level.
    """
    nmodes, n = coords.shape
    one = np.uint64(1)
    for j in range(n):
        for m in range(nmodes):
            c = coords[m, j]
            for b in range(max_bits):
                if (c >> b) & 1:
                    pos = b * nmodes + (nmodes - 1 - m)
                    out[pos // 64, j] |= one << np.uint64(pos % 64)


def morton_words(coords: np.ndarray) -> np.ndarray:
    """Morton (Z-curve) codes of coordinate columns, as uint64 word rows.

    ``coords`` is ``(nmodes, n)`` with nonnegative 32-bit-range entries.  The
    result has ``ceil(32 * nmodes / 64)`` rows; row 0 holds the least
    significant 64 bits.  Comparing word tuples (most significant row first)
    compares Morton codes.
    """
    coords = np.ascontiguousarray(np.asarray(coords, dtype=np.int64))
    if coords.ndim != 2:
        raise ValueError(f"coords must be 2-D (nmodes, n), got shape {coords.shape}")
    nmodes, n = coords.shape
    nwords = (_COORD_BITS * nmodes + 63) // 64
    out = np.zeros((nwords, n), dtype=np.uint64)
    if n == 0 or nmodes == 0:
        return out
    if coords.min() < 0:
        raise ValueError("coordinates must be nonnegative")
    top = int(coords.max())
    max_bits = min(_COORD_BITS, max(1, top.bit_length()))
    _interleave_bits(coords, max_bits, out)
    return out


def morton_argsort(coords: np.ndarray, minor_keys: Sequence[np.ndarray] = ()) -> np.ndarray:
    """Stable permutation ordering columns by Morton code of ``coords``.

    ``minor_keys`` break ties among equal coordinates, first key first.
    """
    words = morton_words(coords)
    keys = tuple(reversed(tuple(minor_keys))) + tuple(words)
    return np.lexsort(keys)


@dataclasses.dataclass
class HicooTensor:
    """Sparse tensor in HiCOO format (all modes block-compressed).

    ``bptr`` (int64, ``n_b + 1`` entries) delimits blocks; ``binds`` (int32,
    ``(order, n_b)``) holds block coordinates; ``einds`` (uint8,
    ``(order, nnz)``) holds within-block offsets.  Blocks are in Morton order
    of their coordinates and are nonempty and unique; elements within a block
    are in Morton order of their offsets.
    """

    dims: tuple[int, ...]
    block_size: int
    bptr: np.ndarray
    binds: np.ndarray
    einds: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.dims = _check_dims(self.dims)
        self.block_size = check_block_size(self.block_size)
        self.bptr = np.ascontiguousarray(np.asarray(self.bptr, dtype=BPTR_DTYPE))
        self.binds = np.ascontiguousarray(np.asarray(self.binds, dtype=BIND_DTYPE))
        self.einds = np.ascontiguousarray(np.asarray(self.einds, dtype=EIND_DTYPE))
        self.vals = np.ascontiguousarray(np.asarray(self.vals))
        _check_value_dtype(self.vals.dtype)
        order = len(self.dims)
        if self.binds.ndim != 2 or self.binds.shape[0] != order:
            raise ValueError(f"binds must have shape ({order}, n_b)")
        if self.einds.ndim != 2 or self.einds.shape[0] != order:
            raise ValueError(f"einds must have shape ({order}, nnz)")
        if self.bptr.ndim != 1 or self.bptr.size != self.binds.shape[1] + 1:
            raise ValueError("bptr must have n_b + 1 entries")
        if self.vals.shape != (self.einds.shape[1],):
            raise ValueError("vals must have one entry per nonzero")

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return self.einds.shape[1]

    @property
    def n_b(self) -> int:
        return self.binds.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.vals.dtype

    def block_of_nonzero(self) -> np.ndarray:
        """Block id of each stored nonzero (int64, length nnz)."""
        return np.repeat(
            np.arange(self.n_b, dtype=np.int64), np.diff(self.bptr)
        )

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (
            f"HicooTensor(dims={self.dims}, B={self.block_size}, nnz={self.nnz}, "
            f"n_b={self.n_b}, dtype={self.dtype.name})"
        )


@dataclasses.dataclass
class GHicooTensor:
    """Sparse tensor with a block-compressed mode subset (gHiCOO).

    Compressed modes are stored exactly as in HiCOO (``binds``/``einds`` rows
    follow ``compressed_modes`` in ascending order); every uncompressed mode
    keeps a full 32-bit per-nonzero index row in ``uinds`` (rows follow the
    uncompressed modes in ascending order).  Blocks are defined over the
    compressed modes only and follow their Morton order; ties among nonzeros
    with equal compressed coordinates are broken by the uncompressed indices
    in natural mode order.
    """

    dims: tuple[int, ...]
    block_size: int
    compressed_modes: tuple[int, ...]
    bptr: np.ndarray
    binds: np.ndarray
    einds: np.ndarray
    uinds: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.dims = _check_dims(self.dims)
        self.block_size = check_block_size(self.block_size)
        order = len(self.dims)
        modes = tuple(int(m) for m in self.compressed_modes)
        if not modes:
            raise ValueError("compressed_modes must be nonempty")
        if len(set(modes)) != len(modes) or any(not 0 <= m < order for m in modes):
            raise ValueError(
                f"compressed_modes {modes} must be distinct modes of an "
                f"order-{order} tensor"
            )
        self.compressed_modes = tuple(sorted(modes))
        self.bptr = np.ascontiguousarray(np.asarray(self.bptr, dtype=BPTR_DTYPE))
        self.binds = np.ascontiguousarray(np.asarray(self.binds, dtype=BIND_DTYPE))
        self.einds = np.ascontiguousarray(np.asarray(self.einds, dtype=EIND_DTYPE))
        self.uinds = np.ascontiguousarray(np.asarray(self.uinds, dtype=INDEX_DTYPE))
        self.vals = np.ascontiguousarray(np.asarray(self.vals))
        _check_value_dtype(self.vals.dtype)
        ncomp = len(self.compressed_modes)
        nunc = order - ncomp
        if self.binds.ndim != 2 or self.binds.shape[0] != ncomp:
            raise ValueError(f"binds must have shape ({ncomp}, n_b)")
        if self.einds.ndim != 2 or self.einds.shape[0] != ncomp:
            raise ValueError(f"einds must have shape ({ncomp}, nnz)")
        if self.uinds.ndim != 2 or self.uinds.shape[0] != nunc:
            raise ValueError(f"uinds must have shape ({nunc}, nnz)")
        if self.bptr.ndim != 1 or self.bptr.size != self.binds.shape[1] + 1:
            raise ValueError("bptr must have n_b + 1 entries")
        if self.uinds.shape[1] != self.einds.shape[1]:
            raise ValueError("uinds and einds must describe the same nonzeros")
        if self.vals.shape != (self.einds.shape[1],):
            raise ValueError("vals must have one entry per nonzero")

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return self.einds.shape[1]

    @property
    def n_b(self) -> int:
        return self.binds.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.vals.dtype

    @property
    def uncompressed_modes(self) -> tuple[int, ...]:
        comp = set(self.compressed_modes)
        return tuple(m for m in range(self.order) if m not in comp)

    def block_of_nonzero(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_b, dtype=np.int64), np.diff(self.bptr))

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (
            f"GHicooTensor(dims={self.dims}, B={self.block_size}, "
            f"compressed={self.compressed_modes}, nnz={self.nnz}, n_b={self.n_b})"
        )


def _blocked_arrays(t: CooTensor, modes: tuple[int, ...], block_size: int):
    """Sort ``t`` by Morton code over ``modes`` and split block/element bits.

    Returns ``(perm, bptr, binds, einds)``.  Ties among nonzeros with equal
    compressed coordinates are broken by the remaining modes' indices in
    natural mode order (stable, deterministic).
    """
    shift = int(block_size).bit_length() - 1
    comp = t.inds[list(modes)]
    others = [m for m in range(t.order) if m not in modes]
    minor = [t.inds[m] for m in others]
    perm = morton_argsort(comp, minor_keys=minor)
    comp = comp[:, perm]
    blk = comp >> shift
    eind = comp & (block_size - 1)
    nnz = comp.shape[1]
    if nnz == 0:
        bptr = np.zeros(1, dtype=BPTR_DTYPE)
        binds = np.empty((len(modes), 0), dtype=BIND_DTYPE)
        einds = np.empty((len(modes), 0), dtype=EIND_DTYPE)
        return perm, bptr, binds, einds
    changed = np.any(blk[:, 1:] != blk[:, :-1], axis=0)
    starts = np.concatenate(([0], np.flatnonzero(changed) + 1))
    bptr = np.concatenate((starts, [nnz])).astype(BPTR_DTYPE)
    binds = np.ascontiguousarray(blk[:, starts], dtype=BIND_DTYPE)
    einds = np.ascontiguousarray(eind, dtype=EIND_DTYPE)
    return perm, bptr, binds, einds


def to_hicoo(t: CooTensor, block_size: int = 128) -> HicooTensor:
    """Convert a COO tensor to HiCOO with blocks of side ``block_size``.

    Values are permuted, never combined: the conversion is exact and
    round-trips through ``from_hicoo``.
    """
    block_size = check_block_size(block_size)
    modes = tuple(range(t.order))
    perm, bptr, binds, einds = _blocked_arrays(t, modes, block_size)
    return HicooTensor(t.dims, block_size, bptr, binds, einds, t.vals[perm].copy())


def to_ghicoo(
    t: CooTensor, compressed_modes: Sequence[int], block_size: int = 128
) -> GHicooTensor:
    """Convert a COO tensor to gHiCOO, compressing only ``compressed_modes``."""
    block_size = check_block_size(block_size)
    modes = tuple(int(m) for m in compressed_modes)
    if not modes:
        raise ValueError("compressed_modes must be nonempty")
    if len(set(modes)) != len(modes) or any(not 0 <= m < t.order for m in modes):
        raise ValueError(
            f"compressed_modes {modes} must be distinct modes of an "
            f"order-{t.order} tensor"
        )
    modes = tuple(sorted(modes))
    perm, bptr, binds, einds = _blocked_arrays(t, modes, block_size)
    others = [m for m in range(t.order) if m not in modes]
    uinds = np.ascontiguousarray(t.inds[others][:, perm]) if others else np.empty(
        (0, t.nnz), dtype=INDEX_DTYPE
    )
    return GHicooTensor(
        t.dims, block_size, modes, bptr, binds, einds, uinds, t.vals[perm].copy()
    )


def blocked_full_inds(h: HicooTensor | GHicooTensor) -> np.ndarray:
    """Reconstruct the full ``(order, nnz)`` coordinate array of ``h``."""
    blk = h.block_of_nonzero()
    out = np.empty((h.order, h.nnz), dtype=INDEX_DTYPE)
    if isinstance(h, HicooTensor):
        for m in range(h.order):
            out[m] = h.binds[m][blk] * h.block_size + h.einds[m]
        return out
    for row, m in enumerate(h.compressed_modes):
        out[m] = h.binds[row][blk] * h.block_size + h.einds[row]
    for row, m in enumerate(h.uncompressed_modes):
        out[m] = h.uinds[row]
    return out


def from_hicoo(h: HicooTensor | GHicooTensor) -> CooTensor:
    """Expand a blocked tensor back to COO (natural lexicographic order).

    Exact: values are permuted only.
    """
    inds = blocked_full_inds(h)
    t = CooTensor(h.dims, inds, h.vals.copy(), SortState.unsorted())
    return lex_sort(t)
