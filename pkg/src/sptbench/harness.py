"""Benchmark harness: timed kernel runs over a tensor/kernel/format grid.

The protocol: every triple first gets an untimed preparation stage (format
conversion, fiber layouts, operand allocation, one warm run that also
cross-checks the instrumented flop count against the analytical model),
then ``repetitions`` timed executions; kernels that take a mode argument
run once per mode inside each repetition.  Failures are recorded per triple
and the suite keeps going.

Reports carry measured rates next to the analytical roofline quantities, so
``emit_report`` can render both the per-kernel bar view and the roofline
view.  Emission is a pure function of the result object — same result, same
bytes out.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import os
import time
from typing import Callable, Sequence

import numpy as np

from .analysis import (
    FORMAT_IDS,
    AnalysisParams,
    KernelReport,
    RooflinePlatform,
    get_platform,
    memory_bytes,
    work_flops,
)
from .blocked import VALID_BLOCK_SIZES, to_ghicoo, to_hicoo
from .coo import DEFAULT_VALUE_DTYPE, CooTensor, SortState
from .generators import KroneckerSpec, PowerLawSpec, kronecker_generate, powerlaw_generate
from .kernels import KERNELS, FlopCounter, mttkrp, product_prep, tew, ts, ttm, ttv, warmup
from .runtime import resolve_workers
from .tns import read_tns

PRECISIONS = {"f32": np.float32, "f64": np.float64}

#: Elementwise operation the harness times; addition touches every nonzero
#: once, matching the modeled work.
TEW_OP = "add"
TS_OP = "mul"


@dataclasses.dataclass
class BenchConfig:
    """What to run and how.

    ``tensors`` entries may be paths to ``.tns`` files, ``(name, CooTensor)``
    pairs, or ``(name, KroneckerSpec | PowerLawSpec)`` pairs generated on
    the fly.  ``modes`` is ``"all"`` or an explicit tuple applied to every
    tensor.
    """

    tensors: Sequence
    kernels: tuple[str, ...] = KERNELS
    formats: tuple[str, ...] = FORMAT_IDS
    modes: str | tuple[int, ...] = "all"
    rank: int = 16
    block_size: int = 128
    repetitions: int = 5
    workers: int | None = None
    platform: str | RooflinePlatform = "bluesky"
    precision: str = "f32"
    seed: int = 0

    def __post_init__(self):
        if not self.tensors:
            raise ValueError("config needs at least one tensor")
        self.kernels = tuple(self.kernels)
        for k in self.kernels:
            if k not in KERNELS:
                raise ValueError(f"unknown kernel {k!r}; expected one of {KERNELS}")
        self.formats = tuple(self.formats)
        for f in self.formats:
            if f not in FORMAT_IDS:
                raise ValueError(f"unknown format {f!r}; expected one of {FORMAT_IDS}")
        if self.modes != "all":
            self.modes = tuple(int(m) for m in self.modes)
        if int(self.rank) < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        self.rank = int(self.rank)
        if int(self.block_size) not in VALID_BLOCK_SIZES:
            raise ValueError(
                f"block size must be one of {VALID_BLOCK_SIZES}, got {self.block_size}"
            )
        self.block_size = int(self.block_size)
        if int(self.repetitions) < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        self.repetitions = int(self.repetitions)
        if self.precision not in PRECISIONS:
            raise ValueError(
                f"precision must be one of {sorted(PRECISIONS)}, got {self.precision!r}"
            )
        self.seed = int(self.seed)


@dataclasses.dataclass(frozen=True)
class TripleFailure:
    """A (tensor, kernel, format) combination that could not be measured."""

    tensor: str
    kernel: str
    format: str
    error: str


@dataclasses.dataclass
class BenchSuiteResult:
    """All reports plus the environment they were measured in."""

    reports: list[KernelReport]
    failures: list[TripleFailure]
    platform: RooflinePlatform
    workers: int
    precision: str
    seed: int
    rank: int
    block_size: int
    repetitions: int
    timestamp: str


def _tensor_name(entry, position: int) -> str:
    if isinstance(entry, (str, os.PathLike)):
        base = os.path.basename(os.fspath(entry))
        return base[:-4] if base.endswith(".tns") else base
    if isinstance(entry, tuple) and len(entry) == 2:
        return str(entry[0])
    raise TypeError(
        f"tensor entry {position} must be a path or a (name, tensor-or-spec) pair"
    )


def _resolve_tensor(entry, dtype) -> CooTensor:
    payload = entry[1] if isinstance(entry, tuple) else entry
    if isinstance(payload, (str, os.PathLike)):
        return read_tns(payload, dtype=dtype)
    if isinstance(payload, CooTensor):
        if payload.dtype == dtype:
            return payload
        return CooTensor(payload.dims, payload.inds, payload.vals.astype(dtype), payload.sort)
    if isinstance(payload, KroneckerSpec):
        return kronecker_generate(payload, dtype=dtype)
    if isinstance(payload, PowerLawSpec):
        return powerlaw_generate(payload, dtype=dtype)
    raise TypeError(f"cannot load a tensor from {type(payload).__name__}")


def _operands(t: CooTensor, rank: int, seed: int, index: int) -> dict:
    """Seeded dense operands for one tensor: all values uniform on (0, 1]."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))

    def uniform(*shape):
        return (1.0 - rng.random(shape)).astype(t.dtype)

    return {
        "partner_vals": uniform(t.nnz),
        "scalar": t.dtype.type(1.0 - rng.random()),
        "vectors": [uniform(d) for d in t.dims],
        "factors": [uniform(d, rank) for d in t.dims],
    }


@dataclasses.dataclass
class _TriplePlan:
    mode_keys: tuple
    run: Callable
    params: AnalysisParams


def prepare_triple(
    t: CooTensor,
    kernel: str,
    fmt: str,
    operands: dict,
    *,
    modes: tuple[int, ...],
    rank: int,
    block_size: int,
    workers: int,
) -> _TriplePlan:
    """Untimed stage: conversions, layouts, and the run closure for a triple.

    The returned ``run(mode, counter=None)`` executes exactly one kernel
    call; everything amortizable happens here.  Mode-independent kernels
    get the single mode key ``None``.
    """
    if kernel in ("tew", "ts"):
        mode_keys: tuple = (None,)
    else:
        mode_keys = modes

    if kernel == "tew":
        y = CooTensor(t.dims, t.inds, operands["partner_vals"], t.sort)
        if fmt == "coo":
            x2, y2 = t, y
        else:
            x2, y2 = to_hicoo(t, block_size), to_hicoo(y, block_size)

        def run(mode, counter=None):
            return tew(x2, y2, TEW_OP, workers=workers, counter=counter)

        params = AnalysisParams(nnz=t.nnz)
    elif kernel == "ts":
        x2 = t if fmt == "coo" else to_hicoo(t, block_size)
        scalar = operands["scalar"]

        def run(mode, counter=None):
            return ts(x2, scalar, TS_OP, workers=workers, counter=counter)

        params = AnalysisParams(nnz=t.nnz)
    elif kernel in ("ttv", "ttm"):
        sources = {}
        preps = {}
        for n in mode_keys:
            if fmt == "coo":
                sources[n] = t
            else:
                others = tuple(m for m in range(t.order) if m != n)
                sources[n] = to_ghicoo(t, others, block_size)
            preps[n] = product_prep(sources[n], n)
        vectors = operands["vectors"]
        factors = operands["factors"]

        if kernel == "ttv":

            def run(mode, counter=None):
                return ttv(
                    sources[mode], vectors[mode], mode,
                    prep=preps[mode], workers=workers, counter=counter,
                )

            params = AnalysisParams(
                nnz=t.nnz, nfibs=float(np.mean([preps[n].nfibs for n in mode_keys]))
            )
        else:

            def run(mode, counter=None):
                return ttm(
                    sources[mode], factors[mode], mode,
                    prep=preps[mode], workers=workers, counter=counter,
                )

            params = AnalysisParams(
                nnz=t.nnz,
                nfibs=float(np.mean([preps[n].nfibs for n in mode_keys])),
                rank=rank,
            )
    elif kernel == "mttkrp":
        src = t if fmt == "coo" else to_hicoo(t, block_size)
        factors = operands["factors"]

        def run(mode, counter=None):
            facs = [factors[m] for m in range(t.order) if m != mode]
            return mttkrp(src, facs, mode, workers=workers, counter=counter)

        if fmt == "coo":
            params = AnalysisParams(nnz=t.nnz, rank=rank)
        else:
            params = AnalysisParams(nnz=t.nnz, rank=rank, n_b=src.n_b)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")

    # Warm run per mode; doubles as a consistency check of the instrumented
    # flop count against the analytical model.
    expected = work_flops(kernel, params)
    for mode in mode_keys:
        counter = FlopCounter()
        run(mode, counter)
        if counter.flops != expected:
            raise RuntimeError(
                f"instrumented flops {counter.flops} != modeled {expected} "
                f"for {kernel}/{fmt}"
            )
    return _TriplePlan(mode_keys, run, params)


def bench(config: BenchConfig) -> BenchSuiteResult:
    """Run the suite described by ``config`` (see module docstring)."""
    platform = get_platform(config.platform)
    workers = resolve_workers(config.workers)
    dtype = PRECISIONS[config.precision]
    warmup(dtype)

    names = [_tensor_name(entry, i) for i, entry in enumerate(config.tensors)]
    if len(set(names)) != len(names):
        raise ValueError(f"tensor names must be unique, got {names}")

    reports: list[KernelReport] = []
    failures: list[TripleFailure] = []
    for index, entry in enumerate(config.tensors):
        name = names[index]
        try:
            t = _resolve_tensor(entry, dtype)
        except Exception as e:  # a bad tensor fails all its triples
            for kernel in config.kernels:
                for fmt in config.formats:
                    failures.append(
                        TripleFailure(name, kernel, fmt, f"{type(e).__name__}: {e}")
                    )
            continue
        modes = tuple(range(t.order)) if config.modes == "all" else config.modes
        bad = [m for m in modes if not 0 <= m < t.order]
        operands = _operands(t, config.rank, config.seed, index)
        for kernel in config.kernels:
            for fmt in config.formats:
                if bad:
                    failures.append(
                        TripleFailure(
                            name, kernel, fmt,
                            f"ValueError: modes {bad} out of range for order {t.order}",
                        )
                    )
                    continue
                try:
                    plan = prepare_triple(
                        t, kernel, fmt, operands,
                        modes=modes, rank=config.rank,
                        block_size=config.block_size, workers=workers,
                    )
                    flops = work_flops(kernel, plan.params)
                    nbytes = memory_bytes(kernel, fmt, plan.params)
                    times = [[] for _ in plan.mode_keys]
                    for _ in range(config.repetitions):
                        for slot, mode in enumerate(plan.mode_keys):
                            t0 = time.perf_counter()
                            plan.run(mode)
                            times[slot].append(time.perf_counter() - t0)
                    reports.append(
                        KernelReport.build(name, kernel, fmt, times, flops, nbytes, platform)
                    )
                except Exception as e:
                    failures.append(
                        TripleFailure(name, kernel, fmt, f"{type(e).__name__}: {e}")
                    )
    return BenchSuiteResult(
        reports=reports,
        failures=failures,
        platform=platform,
        workers=workers,
        precision=config.precision,
        seed=config.seed,
        rank=config.rank,
        block_size=config.block_size,
        repetitions=config.repetitions,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    )


# --------------------------------------------------------------------------
# Report emission
# --------------------------------------------------------------------------

CSV_COLUMNS = (
    "tensor", "kernel", "format", "time_s", "flops", "bytes_model",
    "oi", "gflops", "bound_gflops", "efficiency",
    "time_median_s", "time_min_s", "gflops_per_mode_mean",
)

_REPORT_FIELDS = (
    "tensor", "kernel", "format", "time_mean_s", "flops", "bytes_model",
    "oi", "gflops", "bound_gflops", "efficiency",
    "time_median_s", "time_min_s", "gflops_per_mode_mean",
)


def emit_report(result: BenchSuiteResult, fmt: str, dest) -> None:
    """Write the suite result as ``csv`` or ``svg`` to a path or file object.

    Deterministic for a fixed result: floats use shortest round-trip
    formatting in the CSV and fixed precision in the SVG; the environment
    timestamp is deliberately not emitted.
    """
    if not result.reports:
        raise ValueError("nothing to emit: result has no reports")
    if fmt not in ("csv", "svg"):
        raise ValueError(f"unknown report format {fmt!r}; expected csv or svg")
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as f:
            emit_report(result, fmt, f)
            return
    if fmt == "csv":
        _emit_csv(result, dest)
    else:
        dest.write(render_svg(result))


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit_csv(result: BenchSuiteResult, dest) -> None:
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.reports:
        writer.writerow([_cell(getattr(r, f)) for f in _REPORT_FIELDS])


def _f(x: float) -> str:
    return f"{x:.6g}"


def _nice_ceiling(x: float) -> float:
    """Smallest 1/2/5 x 10^k at or above x."""
    if x <= 0:
        return 1.0
    exp = np.floor(np.log10(x))
    for mult in (1.0, 2.0, 5.0, 10.0):
        cand = mult * 10.0**exp
        if cand >= x - 1e-12 * abs(x):
            return cand
    return 10.0 ** (exp + 1)


_FORMAT_COLORS = {"coo": "#4878a8", "hicoo": "#d0894a"}
_MARKER_COLORS = {"tew": "#4878a8", "ts": "#52975c", "ttv": "#d0894a",
                  "ttm": "#a05aa0", "mttkrp": "#c5514c"}


def render_svg(result: BenchSuiteResult) -> str:
    """Two stacked panels: throughput bars and a log-log roofline chart."""
    reports = result.reports
    formats = sorted({r.format for r in reports})
    groups: list[tuple[str, str]] = []
    for r in reports:
        key = (r.tensor, r.kernel)
        if key not in groups:
            groups.append(key)
    by_cell = {(r.tensor, r.kernel, r.format): r for r in reports}

    bar_w = 22
    group_w = bar_w * len(formats) + 26
    margin_l, margin_r = 70, 30
    width = max(660, margin_l + margin_r + group_w * len(groups))
    panel_h, gap, top = 300, 90, 40
    height = top + panel_h + gap + panel_h + 60
    plot0_y = top

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    # --- panel 1: grouped bars -------------------------------------------
    ymax = _nice_ceiling(max(max(r.gflops for r in reports),
                             max(r.bound_gflops for r in reports)))
    out.append(
        f'<text x="{margin_l}" y="{plot0_y - 16}" font-size="13" '
        f'font-weight="bold">Measured throughput (GFLOPS) with roofline bound markers</text>'
    )

    def bar_y(v):
        return plot0_y + panel_h - (v / ymax) * panel_h

    for k in range(5):
        val = ymax * k / 4
        y = bar_y(val)
        out.append(
            f'<line x1="{margin_l}" y1="{_f(y)}" x2="{width - margin_r}" '
            f'y2="{_f(y)}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{margin_l - 6}" y="{_f(y + 4)}" '
            f'text-anchor="end">{_f(val)}</text>'
        )
    for gi, (tensor, kernel) in enumerate(groups):
        gx = margin_l + gi * group_w + 13
        for fi, fmt in enumerate(formats):
            r = by_cell.get((tensor, kernel, fmt))
            if r is None:
                continue
            x = gx + fi * bar_w
            y = bar_y(r.gflops)
            out.append(
                f'<rect class="gflops-bar" x="{_f(x)}" y="{_f(y)}" '
                f'width="{bar_w - 3}" height="{_f(plot0_y + panel_h - y)}" '
                f'fill="{_FORMAT_COLORS.get(fmt, "#888888")}"/>'
            )
            by_ = bar_y(r.bound_gflops)
            out.append(
                f'<line class="bound-marker" x1="{_f(x - 2)}" y1="{_f(by_)}" '
                f'x2="{_f(x + bar_w - 1)}" y2="{_f(by_)}" '
                f'stroke="#222222" stroke-width="2" stroke-dasharray="3,2"/>'
            )
        label = f"{tensor}·{kernel}"
        out.append(
            f'<text x="{_f(gx + bar_w * len(formats) / 2)}" '
            f'y="{plot0_y + panel_h + 14}" text-anchor="middle">{label}</text>'
        )
    for fi, fmt in enumerate(formats):
        lx = width - margin_r - 90
        ly = plot0_y + 14 * fi
        out.append(
            f'<rect x="{lx}" y="{ly}" width="10" height="10" '
            f'fill="{_FORMAT_COLORS.get(fmt, "#888888")}"/>'
        )
        out.append(f'<text x="{lx + 14}" y="{ly + 9}">{fmt}</text>')

    # --- panel 2: roofline ------------------------------------------------
    plot1_y = top + panel_h + gap
    peak = result.platform.peak_gflops
    bw = result.platform.mem_bw_gbs
    ridge = peak / bw
    ois = [r.oi for r in reports]
    perf = [r.gflops for r in reports]
    x_lo = 10.0 ** np.floor(np.log10(min(min(ois), ridge))) / 10
    x_hi = 10.0 ** np.ceil(np.log10(max(max(ois), ridge))) * 10
    y_lo = 10.0 ** np.floor(np.log10(min(perf))) / 10
    y_hi = 10.0 ** np.ceil(np.log10(peak)) * 1.5

    def rx(v):
        return margin_l + (np.log10(v) - np.log10(x_lo)) / (
            np.log10(x_hi) - np.log10(x_lo)
        ) * (width - margin_l - margin_r)

    def ry(v):
        return plot1_y + panel_h - (np.log10(v) - np.log10(y_lo)) / (
            np.log10(y_hi) - np.log10(y_lo)
        ) * panel_h

    out.append(
        f'<text x="{margin_l}" y="{plot1_y - 16}" font-size="13" font-weight="bold">'
        f'Roofline: {result.platform.name} '
        f'(peak {_f(peak)} GFLOPS, {_f(bw)} GB/s)</text>'
    )
    k = int(np.floor(np.log10(x_lo)))
    while 10.0**k <= x_hi:
        v = 10.0**k
        out.append(
            f'<line x1="{_f(rx(v))}" y1="{plot1_y}" x2="{_f(rx(v))}" '
            f'y2="{plot1_y + panel_h}" stroke="#eeeeee"/>'
        )
        out.append(
            f'<text x="{_f(rx(v))}" y="{plot1_y + panel_h + 14}" '
            f'text-anchor="middle">1e{k}</text>'
        )
        k += 1
    k = int(np.floor(np.log10(y_lo)))
    while 10.0**k <= y_hi:
        v = 10.0**k
        out.append(
            f'<line x1="{margin_l}" y1="{_f(ry(v))}" x2="{width - margin_r}" '
            f'y2="{_f(ry(v))}" stroke="#eeeeee"/>'
        )
        out.append(
            f'<text x="{margin_l - 6}" y="{_f(ry(v) + 4)}" '
            f'text-anchor="end">1e{k}</text>'
        )
        k += 1
    # bandwidth slope then flat peak
    out.append(
        f'<polyline fill="none" stroke="#333333" stroke-width="2" points="'
        f'{_f(rx(x_lo))},{_f(ry(bw * x_lo))} {_f(rx(ridge))},{_f(ry(peak))} '
        f'{_f(rx(x_hi))},{_f(ry(peak))}"/>'
    )
    seen: list[tuple[str, str]] = []
    for r in reports:
        if (r.kernel, r.format) not in seen:
            seen.append((r.kernel, r.format))
    for kernel, fmt in seen:
        rs = [r for r in reports if (r.kernel, r.format) == (kernel, fmt)]
        moi = float(np.mean([r.oi for r in rs]))
        mgf = float(np.mean([r.gflops for r in rs]))
        cx, cy = rx(moi), ry(mgf)
        color = _MARKER_COLORS.get(kernel, "#555555")
        shape_fill = color if fmt == "coo" else "white"
        out.append(
            f'<circle class="oi-marker" cx="{_f(cx)}" cy="{_f(cy)}" r="5" '
            f'fill="{shape_fill}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{_f(cx + 8)}" y="{_f(cy + 4)}" fill="{color}">'
            f'{kernel}/{fmt}</text>'
        )
    out.append(
        f'<text x="{_f((margin_l + width - margin_r) / 2)}" y="{height - 10}" '
        f'text-anchor="middle">operational intensity (flops/byte)</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
