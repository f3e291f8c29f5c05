"""Semi-sparse tensors: sparse over some modes, dense over the rest.

The tensor-times-matrix product densifies the product mode: every surviving
mode-``n`` fiber becomes one contiguous value chunk of length ``R``.  The
sparse modes are indexed either COO-style (one 32-bit row per sparse mode,
one column per fiber: "sCOO") or HiCOO-style (block pointer / block indices /
element offsets over the sparse modes: "sHiCOO").
"""
from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .blocked import BIND_DTYPE, BPTR_DTYPE, EIND_DTYPE, check_block_size
from .coo import INDEX_DTYPE, _check_dims, _check_value_dtype


@dataclasses.dataclass
class SemiSparseTensor:
    """A tensor that is sparse over ``sparse_modes`` and dense elsewhere.

    ``vals`` has shape ``(nfibs, chunk)`` where ``chunk`` is the product of
    the dense-mode extents; row ``f`` is the dense chunk of the ``f``-th
    stored fiber, laid out in row-major order of the dense modes.  Exactly
    one of the two sparse index stores is present:

    * ``sinds`` — ``(len(sparse_modes), nfibs)`` int32, COO-style;
    * ``bptr``/``binds``/``einds`` — HiCOO-style over the sparse modes, with
      ``block_size`` set.
    """

    dims: tuple[int, ...]
    dense_modes: tuple[int, ...]
    vals: np.ndarray
    sinds: np.ndarray | None = None
    bptr: np.ndarray | None = None
    binds: np.ndarray | None = None
    einds: np.ndarray | None = None
    block_size: int | None = None

    def __post_init__(self):
        self.dims = _check_dims(self.dims)
        order = len(self.dims)
        dense = tuple(sorted(int(m) for m in self.dense_modes))
        if not dense:
            raise ValueError("dense_modes must be nonempty")
        if len(set(dense)) != len(dense) or any(not 0 <= m < order for m in dense):
            raise ValueError(
                f"dense_modes {dense} must be distinct modes of an order-{order} tensor"
            )
        if len(dense) >= order:
            raise ValueError("at least one mode must remain sparse")
        self.dense_modes = dense
        self.vals = np.ascontiguousarray(np.asarray(self.vals))
        _check_value_dtype(self.vals.dtype)
        chunk = math.prod(self.dims[m] for m in dense)
        if self.vals.ndim != 2 or self.vals.shape[1] != chunk:
            raise ValueError(
                f"vals must have shape (nfibs, {chunk}) for dense extents "
                f"{tuple(self.dims[m] for m in dense)}, got {self.vals.shape}"
            )
        nfibs = self.vals.shape[0]
        nsparse = order - len(dense)
        coo_style = self.sinds is not None
        blocked = self.bptr is not None or self.binds is not None or self.einds is not None
        if coo_style == blocked:
            raise ValueError(
                "exactly one sparse index store must be given: sinds, or "
                "bptr/binds/einds with block_size"
            )
        if coo_style:
            self.sinds = np.ascontiguousarray(np.asarray(self.sinds, dtype=INDEX_DTYPE))
            if self.sinds.shape != (nsparse, nfibs):
                raise ValueError(
                    f"sinds must have shape ({nsparse}, {nfibs}), got {self.sinds.shape}"
                )
        else:
            if self.bptr is None or self.binds is None or self.einds is None or self.block_size is None:
                raise ValueError("blocked store needs bptr, binds, einds and block_size")
            self.block_size = check_block_size(self.block_size)
            self.bptr = np.ascontiguousarray(np.asarray(self.bptr, dtype=BPTR_DTYPE))
            self.binds = np.ascontiguousarray(np.asarray(self.binds, dtype=BIND_DTYPE))
            self.einds = np.ascontiguousarray(np.asarray(self.einds, dtype=EIND_DTYPE))
            if self.binds.ndim != 2 or self.binds.shape[0] != nsparse:
                raise ValueError(f"binds must have shape ({nsparse}, n_b)")
            if self.einds.shape != (nsparse, nfibs):
                raise ValueError(f"einds must have shape ({nsparse}, {nfibs})")
            if self.bptr.ndim != 1 or self.bptr.size != self.binds.shape[1] + 1:
                raise ValueError("bptr must have n_b + 1 entries")

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def sparse_modes(self) -> tuple[int, ...]:
        dense = set(self.dense_modes)
        return tuple(m for m in range(self.order) if m not in dense)

    @property
    def nfibs(self) -> int:
        return self.vals.shape[0]

    @property
    def chunk(self) -> int:
        return self.vals.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.vals.dtype

    @property
    def sparse_format(self) -> str:
        return "coo" if self.sinds is not None else "hicoo"

    def sparse_full_inds(self) -> np.ndarray:
        """Full ``(len(sparse_modes), nfibs)`` sparse-mode coordinates."""
        if self.sinds is not None:
            return self.sinds
        blk = np.repeat(np.arange(self.binds.shape[1], dtype=np.int64), np.diff(self.bptr))
        out = np.empty((self.binds.shape[0], self.nfibs), dtype=INDEX_DTYPE)
        for row in range(self.binds.shape[0]):
            out[row] = self.binds[row][blk] * self.block_size + self.einds[row]
        return out

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (
            f"SemiSparseTensor(dims={self.dims}, dense={self.dense_modes}, "
            f"nfibs={self.nfibs}, chunk={self.chunk}, store={self.sparse_format})"
        )
