"""Sparse kernels: TEW, TS, TTV, TTM, MTTKRP, plus dense references.

All kernels are pure functions of their operands — no state is retained
between calls.  Each takes an optional ``workers`` argument (see
``sptbench.runtime``) and an optional ``counter`` to tally flops; the counts
follow the standard third-order cost model (TEW/TS: 1 op per entry, TTV: 2
per nonzero, TTM: 2 per nonzero and rank column, MTTKRP: 3 per nonzero and
rank column) so measured rates are comparable across formats and machines.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .elementwise import ELEMENTWISE_OPS, SCALAR_OPS, tew, ts
from .mttkrp import STRATEGIES as MTTKRP_STRATEGIES
from .mttkrp import mttkrp
from .oracle import (
    DEFAULT_DENSE_CAP,
    dense_mttkrp,
    dense_tew,
    dense_ts,
    dense_ttm,
    dense_ttv,
    oracle,
    to_dense,
)
from .products import ProductPrep, product_prep, ttm, ttm_prep, ttv, ttv_prep

KERNELS = ("tew", "ts", "ttv", "ttm", "mttkrp")


@dataclasses.dataclass
class FlopCounter:
    """Accumulates the floating-point operation count of kernel runs."""

    flops: int = 0

    def add(self, n: int) -> None:
        self.flops += int(n)

    def reset(self) -> None:
        self.flops = 0


def work_per_run(kernel: str, nnz: int, rank: int = 1) -> int:
    """Model flop count of one kernel run (third-order cost model)."""
    if kernel in ("tew", "ts"):
        return nnz
    if kernel == "ttv":
        return 2 * nnz
    if kernel == "ttm":
        return 2 * nnz * rank
    if kernel == "mttkrp":
        return 3 * nnz * rank
    raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def warmup(dtype=np.float32) -> None:
    """Run every kernel once on tiny inputs to absorb jit compilation.

    Benchmarks and timing-sensitive tests call this during their untimed
    pre-processing stage.
    """
    from ..blocked import to_ghicoo, to_hicoo
    from ..coo import coo_from_entries

    t = coo_from_entries(
        (4, 4, 4),
        [((0, 0, 0), 1.0), ((0, 1, 2), 2.0), ((2, 3, 1), 3.0), ((3, 3, 3), 4.0)],
        dtype=dtype,
    )
    other = coo_from_entries((4, 4, 4), [((0, 0, 0), 2.0), ((1, 1, 1), 1.0)], dtype=dtype)
    h = to_hicoo(t, 2)
    tew(t, t, "add")
    tew(t, other, "add")
    tew(t, other, "mul")
    tew(h, to_hicoo(t, 2), "add")
    ts(t, 2.0, "mul")
    ts(h, 2.0, "add")
    v = np.ones(4, dtype=dtype)
    u = np.ones((4, 2), dtype=dtype)
    factors = [u, u]
    for n in range(3):
        g = to_ghicoo(t, [m for m in range(3) if m != n], 2)
        ttv(t, v, n)
        ttv(g, v, n)
        ttm(t, u, n)
        ttm(g, u, n)
        mttkrp(t, factors, n)
        mttkrp(h, factors, n)


__all__ = [
    "KERNELS",
    "ELEMENTWISE_OPS",
    "SCALAR_OPS",
    "MTTKRP_STRATEGIES",
    "DEFAULT_DENSE_CAP",
    "FlopCounter",
    "ProductPrep",
    "tew",
    "ts",
    "ttv",
    "ttm",
    "mttkrp",
    "ttv_prep",
    "ttm_prep",
    "product_prep",
    "to_dense",
    "oracle",
    "dense_tew",
    "dense_ts",
    "dense_ttv",
    "dense_ttm",
    "dense_mttkrp",
    "warmup",
    "work_per_run",
]
