"""Analytical performance model for the sparse kernels.

Pure arithmetic, no measurement: per-kernel flop counts and modeled DRAM
traffic as closed-form functions of tensor statistics, their ratio
(operational intensity), and the roofline bound ``min(peak, bw * oi)`` a
platform imposes at that intensity.  ``efficiency`` relates a measured rate
to that bound and is deliberately not clamped — a kernel whose working set
sits in cache can land above 1.

The traffic formulas charge each index word and value once per algorithmic
touch under a modest cache assumption (4-byte indices/values except where a
kernel is value-only); they are models, not measurements.
"""
from __future__ import annotations

import dataclasses
import io
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

KERNEL_IDS = ("tew", "ts", "ttv", "ttm", "mttkrp")
FORMAT_IDS = ("coo", "hicoo")


@dataclasses.dataclass(frozen=True)
class AnalysisParams:
    """Tensor statistics the work/traffic formulas consume.

    Only ``nnz`` is always required; the rest may be left ``None`` when no
    formula in use touches them.  ``nnz_b`` (mean nonzeros per block)
    defaults to the exact ratio ``nnz / n_b``, which keeps
    ``nnz_b * n_b == nnz`` identically.
    """

    nnz: int
    nfibs: float | None = None
    rank: int | None = None
    n_b: int | None = None
    nnz_b: float | None = None
    block_size: int | None = None

    def __post_init__(self):
        if int(self.nnz) < 0:
            raise ValueError(f"nnz must be >= 0, got {self.nnz}")
        object.__setattr__(self, "nnz", int(self.nnz))
        for field in ("nfibs", "rank", "n_b", "nnz_b", "block_size"):
            v = getattr(self, field)
            if v is not None and v < 0:
                raise ValueError(f"{field} must be >= 0, got {v}")
        if self.n_b is not None:
            object.__setattr__(self, "n_b", int(self.n_b))
            if self.nnz_b is None and self.n_b > 0:
                object.__setattr__(self, "nnz_b", self.nnz / self.n_b)
        if self.nnz_b is not None and self.n_b is not None and self.n_b > 0:
            if abs(self.nnz_b * self.n_b - self.nnz) > 1.0:
                raise ValueError(
                    f"nnz_b * n_b = {self.nnz_b * self.n_b} strays more than 1 "
                    f"from nnz = {self.nnz}"
                )

    def _require(self, kernel: str, *fields: str):
        for field in fields:
            if getattr(self, field) is None:
                raise ValueError(f"{kernel} needs {field}, which is not set")


def _check_kernel(kernel: str) -> str:
    if kernel not in KERNEL_IDS:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {KERNEL_IDS}")
    return kernel


def _check_format(fmt: str) -> str:
    if fmt not in FORMAT_IDS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMAT_IDS}")
    return fmt


def work_flops(kernel: str, p: AnalysisParams) -> int:
    """Arithmetic operations one run of ``kernel`` performs."""
    _check_kernel(kernel)
    if kernel in ("tew", "ts"):
        return p.nnz
    if kernel == "ttv":
        return 2 * p.nnz
    if kernel == "ttm":
        p._require("ttm", "rank")
        return 2 * p.nnz * p.rank
    p._require("mttkrp", "rank")
    return 3 * p.nnz * p.rank


def memory_bytes(kernel: str, fmt: str, p: AnalysisParams) -> float:
    """Modeled DRAM traffic of one run, in bytes.

    The model distinguishes formats only where the algorithms differ
    materially (MTTKRP); elsewhere the same charge applies to both.
    """
    _check_kernel(kernel)
    _check_format(fmt)
    if kernel == "tew":
        return 12.0 * p.nnz
    if kernel == "ts":
        return 8.0 * p.nnz
    if kernel == "ttv":
        p._require("ttv", "nfibs")
        return 12.0 * p.nnz + 12.0 * p.nfibs
    if kernel == "ttm":
        p._require("ttm", "rank", "nfibs")
        return 4.0 * p.nnz * p.rank + 4.0 * p.nfibs * p.rank + 8.0 * p.nnz + 8.0 * p.nfibs
    if fmt == "coo":
        p._require("mttkrp", "rank")
        return 12.0 * p.nnz * p.rank + 16.0 * p.nnz
    p._require("mttkrp (hicoo)", "rank", "n_b", "nnz_b")
    return 12.0 * p.rank * min(p.n_b * p.nnz_b, p.nnz) + 7.0 * p.nnz + 20.0 * p.n_b


def operational_intensity(kernel: str, fmt: str, p: AnalysisParams) -> float:
    """Flops per byte of modeled traffic."""
    flops = work_flops(kernel, p)
    nbytes = memory_bytes(kernel, fmt, p)
    if nbytes == 0:
        raise ValueError(f"{kernel}/{fmt} has zero modeled bytes; oi is undefined")
    return flops / nbytes


@dataclasses.dataclass(frozen=True)
class RooflinePlatform:
    """Peak compute rate and DRAM bandwidth of one machine."""

    name: str
    peak_gflops: float
    mem_bw_gbs: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("platform name must be non-empty")
        if not self.peak_gflops > 0:
            raise ValueError(f"peak_gflops must be > 0, got {self.peak_gflops}")
        if not self.mem_bw_gbs > 0:
            raise ValueError(f"mem_bw_gbs must be > 0, got {self.mem_bw_gbs}")

    @property
    def ridge_oi(self) -> float:
        """Intensity above which the platform is compute-bound."""
        return self.peak_gflops / self.mem_bw_gbs


def roofline_bound(platform: RooflinePlatform, oi: float) -> float:
    """Attainable GFLOPS at operational intensity ``oi``."""
    if not oi > 0:
        raise ValueError(f"oi must be > 0, got {oi}")
    return min(platform.peak_gflops, platform.mem_bw_gbs * oi)


def efficiency(measured_gflops: float, bound_gflops: float) -> float:
    """Measured rate as a fraction of the roofline bound (not clamped)."""
    if not bound_gflops > 0:
        raise ValueError(f"bound must be > 0, got {bound_gflops}")
    return measured_gflops / bound_gflops


# --------------------------------------------------------------------------
# Platform presets
# --------------------------------------------------------------------------


def load_platforms(source) -> dict[str, RooflinePlatform]:
    """Parse a platform presets file into ``{name: RooflinePlatform}``.

    The format is blocks of ``key = value`` lines (keys ``name``,
    ``peak_gflops``, ``mem_bw_gbs``), a new block starting at each ``name``
    line; ``#`` starts a comment.
    """
    if isinstance(source, (str, bytes)):
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = source.read()
    platforms: dict[str, RooflinePlatform] = {}
    block: dict[str, str] = {}

    def flush(lineno):
        if not block:
            return
        missing = {"name", "peak_gflops", "mem_bw_gbs"} - set(block)
        if missing:
            raise ValueError(
                f"platform block ending at line {lineno} is missing {sorted(missing)}"
            )
        p = RooflinePlatform(
            block["name"], float(block["peak_gflops"]), float(block["mem_bw_gbs"])
        )
        if p.name in platforms:
            raise ValueError(f"duplicate platform name {p.name!r}")
        platforms[p.name] = p
        block.clear()

    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "name":
            flush(lineno)
        if key in block:
            raise ValueError(f"line {lineno}: duplicate key {key!r} in block")
        block[key] = value
    flush(lineno)
    return platforms


def builtin_platforms() -> dict[str, RooflinePlatform]:
    """The platform presets bundled with the package."""
    text = resources.files("sptbench").joinpath("data/platforms.txt").read_text()
    return load_platforms(io.StringIO(text))


def get_platform(platform, presets: Mapping[str, RooflinePlatform] | None = None) -> RooflinePlatform:
    """Resolve a platform given by name or already-built object."""
    if isinstance(platform, RooflinePlatform):
        return platform
    table = builtin_platforms() if presets is None else presets
    try:
        return table[platform]
    except KeyError:
        raise ValueError(
            f"unknown platform {platform!r}; available: {sorted(table)}"
        ) from None


# --------------------------------------------------------------------------
# Per-run report
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class KernelReport:
    """One benchmark row: a (tensor, kernel, format) triple's measurements.

    ``gflops`` uses the mean time, matching how the rates are reported; the
    median and minimum are kept alongside for stability checks.  For
    kernels that run once per mode, ``time_mean_s`` averages over all
    (mode, repetition) samples and ``gflops_per_mode_mean`` averages the
    per-mode rates instead; the two orderings genuinely differ, so both are
    recorded.  ``bytes_model`` likewise uses the mean fiber count across
    modes.  Derived fields always satisfy ``oi = flops / bytes_model``,
    ``gflops = flops / (1e9 * time_mean_s)`` and
    ``efficiency = gflops / bound_gflops``.
    """

    tensor: str
    kernel: str
    format: str
    time_mean_s: float
    time_median_s: float
    time_min_s: float
    flops: int
    bytes_model: float
    oi: float
    gflops: float
    bound_gflops: float
    efficiency: float
    gflops_per_mode_mean: float

    @classmethod
    def build(
        cls,
        tensor: str,
        kernel: str,
        fmt: str,
        times_by_mode: Iterable[Iterable[float]],
        flops: int,
        bytes_model: float,
        platform: RooflinePlatform,
    ) -> "KernelReport":
        """Derive all rate fields from raw per-mode repetition timings."""
        per_mode = [np.asarray(list(times), dtype=np.float64) for times in times_by_mode]
        if not per_mode or any(times.size == 0 for times in per_mode):
            raise ValueError("times_by_mode needs at least one timing per mode")
        flat = np.concatenate(per_mode)
        if np.any(flat <= 0):
            raise ValueError("wall times must be positive")
        time_mean = float(flat.mean())
        gflops = flops / (1e9 * time_mean)
        oi = flops / bytes_model
        bound = roofline_bound(platform, oi)
        per_mode_rates = [flops / (1e9 * float(times.mean())) for times in per_mode]
        return cls(
            tensor=tensor,
            kernel=_check_kernel(kernel),
            format=_check_format(fmt),
            time_mean_s=time_mean,
            time_median_s=float(np.median(flat)),
            time_min_s=float(flat.min()),
            flops=int(flops),
            bytes_model=float(bytes_model),
            oi=oi,
            gflops=gflops,
            bound_gflops=bound,
            efficiency=efficiency(gflops, bound),
            gflops_per_mode_mean=float(np.mean(per_mode_rates)),
        )
