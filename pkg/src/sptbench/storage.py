"""Exact storage accounting for every representation.

Byte counts sum the actual index/pointer/value buffers (32-bit indices and
block indices, 8-bit element offsets, 64-bit block/fiber pointers, values at
their stored width).  With default 32-bit values this gives the closed forms

* COO:     ``4 * (order + 1) * nnz``
* HiCOO:   ``8 * (n_b + 1) + 4 * order * n_b + order * nnz + 4 * nnz``

and the gHiCOO / semi-sparse analogues.
"""
from __future__ import annotations

import numpy as np

from .blocked import GHicooTensor, HicooTensor
from .coo import CooTensor, FiberLayout
from .semisparse import SemiSparseTensor


def storage_bytes(obj) -> int:
    """Bytes needed by the index and value arrays of ``obj``."""
    if isinstance(obj, CooTensor):
        return obj.inds.nbytes + obj.vals.nbytes
    if isinstance(obj, HicooTensor):
        return obj.bptr.nbytes + obj.binds.nbytes + obj.einds.nbytes + obj.vals.nbytes
    if isinstance(obj, GHicooTensor):
        return (
            obj.bptr.nbytes
            + obj.binds.nbytes
            + obj.einds.nbytes
            + obj.uinds.nbytes
            + obj.vals.nbytes
        )
    if isinstance(obj, SemiSparseTensor):
        total = obj.vals.nbytes
        if obj.sparse_format == "coo":
            total += obj.sinds.nbytes
        else:
            total += obj.bptr.nbytes + obj.binds.nbytes + obj.einds.nbytes
        return total
    if isinstance(obj, FiberLayout):
        return obj.fptr.nbytes
    if isinstance(obj, np.ndarray):
        return obj.nbytes
    raise TypeError(f"cannot account storage for objects of type {type(obj).__name__}")
