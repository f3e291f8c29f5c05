"""Sparse tensor kernel benchmark suite.

Formats (COO, HiCOO, gHiCOO, semi-sparse), the five reference kernels (TEW,
TS, TTV, TTM, MTTKRP), synthetic tensor generators, a roofline-style
analysis model, ``.tns`` file I/O, and a benchmark harness with CSV/SVG
reporting.
"""
from __future__ import annotations

from .analysis import (
    AnalysisParams,
    KernelReport,
    RooflinePlatform,
    builtin_platforms,
    efficiency,
    get_platform,
    load_platforms,
    memory_bytes,
    operational_intensity,
    roofline_bound,
    work_flops,
)
from .blocked import (
    VALID_BLOCK_SIZES,
    GHicooTensor,
    HicooTensor,
    from_hicoo,
    to_ghicoo,
    to_hicoo,
)
from .checks import validate
from .coo import (
    DEFAULT_VALUE_DTYPE,
    INDEX_DTYPE,
    CooTensor,
    FiberLayout,
    SortState,
    build_fiber_layout,
    coo_from_arrays,
    coo_from_entries,
    lex_sort,
)
from .generators import (
    DegreeHistogram,
    KroneckerSpec,
    PowerLawFit,
    PowerLawSpec,
    kronecker_generate,
    kronecker_sample,
    mode_degree_histogram,
    powerlaw_fit,
    powerlaw_generate,
)
from .harness import (
    BenchConfig,
    BenchSuiteResult,
    TripleFailure,
    bench,
    emit_report,
    render_svg,
)
from .kernels import (
    KERNELS,
    FlopCounter,
    mttkrp,
    oracle,
    tew,
    to_dense,
    ts,
    ttm,
    ttv,
    ttv_prep,
    ttm_prep,
)
from .runtime import WORKERS_ENV_VAR, default_workers
from .semisparse import SemiSparseTensor
from .storage import storage_bytes
from .tns import bundled_tensors, read_tns, write_tns

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CooTensor",
    "HicooTensor",
    "GHicooTensor",
    "SemiSparseTensor",
    "FiberLayout",
    "SortState",
    "coo_from_entries",
    "coo_from_arrays",
    "lex_sort",
    "build_fiber_layout",
    "to_hicoo",
    "to_ghicoo",
    "from_hicoo",
    "storage_bytes",
    "validate",
    "tew",
    "ts",
    "ttv",
    "ttm",
    "mttkrp",
    "ttv_prep",
    "ttm_prep",
    "to_dense",
    "oracle",
    "FlopCounter",
    "AnalysisParams",
    "RooflinePlatform",
    "KernelReport",
    "work_flops",
    "memory_bytes",
    "operational_intensity",
    "roofline_bound",
    "efficiency",
    "builtin_platforms",
    "load_platforms",
    "get_platform",
    "KroneckerSpec",
    "PowerLawSpec",
    "DegreeHistogram",
    "PowerLawFit",
    "kronecker_generate",
    "kronecker_sample",
    "powerlaw_generate",
    "mode_degree_histogram",
    "powerlaw_fit",
    "read_tns",
    "write_tns",
    "bundled_tensors",
    "BenchConfig",
    "BenchSuiteResult",
    "TripleFailure",
    "bench",
    "emit_report",
    "render_svg",
    "KERNELS",
    "VALID_BLOCK_SIZES",
    "INDEX_DTYPE",
    "DEFAULT_VALUE_DTYPE",
    "WORKERS_ENV_VAR",
    "default_workers",
]
