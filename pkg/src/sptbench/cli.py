"""Command-line interface.

Five subcommands: ``convert`` (re-encode a coordinate file through an
in-memory format and report its storage), ``generate`` (synthesize a tensor
to a ``.tns`` file), ``bench`` (run the measurement suite and emit reports),
``analyze`` (print the analytical model table for given statistics), and
``validate`` (structural checks on a file).  The default worker count comes
from SPTBENCH_WORKERS, falling back to the physical core count.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import (
    FORMAT_IDS,
    AnalysisParams,
    builtin_platforms,
    get_platform,
    load_platforms,
    memory_bytes,
    operational_intensity,
    roofline_bound,
    work_flops,
)
from .blocked import from_hicoo, to_ghicoo, to_hicoo
from .checks import validate
from .coo import CooTensor
from .generators import KroneckerSpec, PowerLawSpec, kronecker_generate, powerlaw_generate
from .harness import PRECISIONS, BenchConfig, bench, emit_report
from .kernels import KERNELS
from .runtime import WORKERS_ENV_VAR
from .storage import storage_bytes
from .tns import read_tns, write_tns


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _csv_strs(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _print_table(rows: list[dict], columns: tuple[str, ...]) -> None:
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in columns}
    print("  ".join(c.ljust(widths[c]) for c in columns))
    for r in rows:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in columns))


def _fmt6(x: float) -> str:
    return f"{x:.6g}"


# --------------------------------------------------------------------------
# convert
# --------------------------------------------------------------------------


def _cmd_convert(args) -> int:
    t = read_tns(args.input, dtype=PRECISIONS[args.precision])
    if args.format == "coo":
        obj: object = t
        out = t
    elif args.format == "hicoo":
        h = to_hicoo(t, args.block_size)
        obj, out = h, from_hicoo(h)
    else:
        if args.compressed_modes is None:
            raise SystemExit("ghicoo needs --compressed-modes")
        g = to_ghicoo(t, args.compressed_modes, args.block_size)
        obj, out = g, t
    problems = validate(obj)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    print(f"dims: {' '.join(str(d) for d in t.dims)}  nnz: {t.nnz}")
    print(f"{args.format} storage: {storage_bytes(obj)} bytes "
          f"(coo baseline: {storage_bytes(t)} bytes)")
    if args.output:
        write_tns(out, args.output)
        print(f"wrote {args.output}")
    return 0


# --------------------------------------------------------------------------
# generate
# --------------------------------------------------------------------------


def _initiator_from_arg(name_or_path: str, order: int) -> np.ndarray:
    """A named preset (2 cells per mode) or probabilities from a .tns file."""
    if name_or_path == "uniform":
        return np.ones((2,) * order)
    if name_or_path == "skewed":
        w = np.full((2,) * order, 0.1)
        w[(0,) * order] = 1.0
        return w
    t = read_tns(name_or_path, dtype=np.float64)
    dense = np.zeros(t.dims)
    dense[tuple(t.inds)] = t.vals
    return dense


def _cmd_generate(args) -> int:
    if args.model == "kron":
        dims = _csv_ints(args.dims)
        initiator = _initiator_from_arg(args.initiator, len(dims))
        spec = KroneckerSpec(
            initiator=initiator,
            iterations=args.iterations,
            target_dims=dims,
            sample_count=args.samples,
            seed=args.seed,
        )
        t = kronecker_generate(spec, dtype=PRECISIONS[args.precision])
    else:
        spec = PowerLawSpec(
            dims=_csv_ints(args.dims),
            nnz_target=args.nnz,
            alpha=args.alpha,
            dense_modes=_csv_ints(args.dense_modes),
            seed=args.seed,
        )
        t = powerlaw_generate(spec, dtype=PRECISIONS[args.precision])
    write_tns(t, args.output)
    print(f"wrote {args.output}: dims {' '.join(str(d) for d in t.dims)}, nnz {t.nnz}")
    return 0


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------


def _resolve_platform_arg(args):
    if args.platforms_file:
        return get_platform(args.platform, load_platforms(args.platforms_file))
    return get_platform(args.platform)


def _cmd_bench(args) -> int:
    config = BenchConfig(
        tensors=args.tensors,
        kernels=_csv_strs(args.kernels),
        formats=_csv_strs(args.formats),
        modes="all" if args.modes == "all" else _csv_ints(args.modes),
        rank=args.rank,
        block_size=args.block_size,
        repetitions=args.reps,
        workers=args.workers,
        platform=_resolve_platform_arg(args),
        precision=args.precision,
        seed=args.seed,
    )
    result = bench(config)
    if result.reports:
        rows = [
            {
                "tensor": r.tensor,
                "kernel": r.kernel,
                "format": r.format,
                "time_s": _fmt6(r.time_mean_s),
                "gflops": _fmt6(r.gflops),
                "oi": _fmt6(r.oi),
                "bound": _fmt6(r.bound_gflops),
                "efficiency": _fmt6(r.efficiency),
            }
            for r in result.reports
        ]
        _print_table(
            rows,
            ("tensor", "kernel", "format", "time_s", "gflops", "oi", "bound", "efficiency"),
        )
    for f in result.failures:
        print(f"FAILED {f.tensor}/{f.kernel}/{f.format}: {f.error}", file=sys.stderr)
    print(f"workers: {result.workers}  platform: {result.platform.name}  "
          f"reports: {len(result.reports)}  failures: {len(result.failures)}")
    if args.csv:
        emit_report(result, "csv", args.csv)
        print(f"wrote {args.csv}")
    if args.svg:
        emit_report(result, "svg", args.svg)
        print(f"wrote {args.svg}")
    return 0 if result.reports else 1


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------


def _cmd_analyze(args) -> int:
    params = AnalysisParams(
        nnz=args.nnz,
        nfibs=args.nfibs,
        rank=args.rank,
        n_b=args.n_b,
        nnz_b=args.nnz_b,
        block_size=args.block_size,
    )
    platform = _resolve_platform_arg(args)
    rows = []
    for kernel in _csv_strs(args.kernels):
        for fmt in _csv_strs(args.formats):
            try:
                flops = work_flops(kernel, params)
                nbytes = memory_bytes(kernel, fmt, params)
                oi = operational_intensity(kernel, fmt, params)
                bound = roofline_bound(platform, oi)
            except ValueError as e:
                rows.append({"kernel": kernel, "format": fmt, "flops": "-",
                             "bytes": "-", "oi": "-", "bound_gflops": str(e)})
                continue
            rows.append({
                "kernel": kernel, "format": fmt, "flops": flops,
                "bytes": _fmt6(nbytes), "oi": _fmt6(oi),
                "bound_gflops": _fmt6(bound),
            })
    print(f"platform: {platform.name} (peak {_fmt6(platform.peak_gflops)} GFLOPS, "
          f"{_fmt6(platform.mem_bw_gbs)} GB/s)")
    _print_table(rows, ("kernel", "format", "flops", "bytes", "oi", "bound_gflops"))
    return 0


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    t = read_tns(args.input, dtype=PRECISIONS[args.precision])
    problems = validate(t)
    if args.block_size:
        problems += validate(to_hicoo(t, args.block_size))
    if problems:
        for p in problems:
            print(f"invalid: {p}")
        return 1
    print(f"ok: dims {' '.join(str(d) for d in t.dims)}, nnz {t.nnz}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sptbench",
        description="Sparse tensor kernel benchmarks over COO and blocked formats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convert", help="re-encode a .tns file through a format")
    conv.add_argument("--input", required=True)
    conv.add_argument("--output", default=None, help="write the tensor back as .tns")
    conv.add_argument("--format", choices=("coo", "hicoo", "ghicoo"), default="hicoo")
    conv.add_argument("--block-size", type=int, default=128)
    conv.add_argument("--compressed-modes", type=_csv_ints, default=None,
                      help="comma-separated modes (ghicoo only)")
    conv.add_argument("--precision", choices=sorted(PRECISIONS), default="f32")
    conv.set_defaults(func=_cmd_convert)

    gen = sub.add_parser("generate", help="synthesize a tensor to a .tns file")
    gsub = gen.add_subparsers(dest="model", required=True)
    kron = gsub.add_parser("kron", help="iterated Kronecker-product sampling")
    kron.add_argument("--dims", required=True, help="target dims, comma-separated")
    kron.add_argument("--iterations", type=int, required=True)
    kron.add_argument("--samples", type=int, required=True)
    kron.add_argument("--initiator", default="skewed",
                      help="'skewed', 'uniform', or a .tns file of cell probabilities")
    plaw = gsub.add_parser("powerlaw", help="power-law sparse modes + dense modes")
    plaw.add_argument("--dims", required=True, help="dims, comma-separated")
    plaw.add_argument("--nnz", type=int, required=True, help="coordinate draws")
    plaw.add_argument("--alpha", type=float, default=2.0)
    plaw.add_argument("--dense-modes", default="", help="comma-separated mode list")
    for p in (kron, plaw):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", required=True)
        p.add_argument("--precision", choices=sorted(PRECISIONS), default="f32")
        p.set_defaults(func=_cmd_generate)

    ben = sub.add_parser("bench", help="run the benchmark suite")
    ben.add_argument("--tensors", nargs="+", required=True, help=".tns paths")
    ben.add_argument("--kernels", default=",".join(KERNELS))
    ben.add_argument("--formats", default=",".join(FORMAT_IDS))
    ben.add_argument("--modes", default="all")
    ben.add_argument("-R", "--rank", type=int, default=16)
    ben.add_argument("--block-size", type=int, default=128)
    ben.add_argument("--reps", type=int, default=5)
    ben.add_argument("--workers", type=int, default=None,
                     help=f"default: ${WORKERS_ENV_VAR} or the physical core count")
    ben.add_argument("--platform", default="bluesky")
    ben.add_argument("--platforms-file", default=None)
    ben.add_argument("--precision", choices=sorted(PRECISIONS), default="f32")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--csv", default=None)
    ben.add_argument("--svg", default=None)
    ben.set_defaults(func=_cmd_bench)

    ana = sub.add_parser("analyze", help="print the analytical model table")
    ana.add_argument("--nnz", type=int, required=True)
    ana.add_argument("--nfibs", type=float, default=None)
    ana.add_argument("-R", "--rank", type=int, default=None)
    ana.add_argument("--n-b", type=int, default=None, help="HiCOO block count")
    ana.add_argument("--nnz-b", type=float, default=None,
                     help="mean nonzeros per block (default nnz/n_b)")
    ana.add_argument("--block-size", type=int, default=None)
    ana.add_argument("--kernels", default=",".join(KERNELS))
    ana.add_argument("--formats", default=",".join(FORMAT_IDS))
    ana.add_argument("--platform", default="bluesky")
    ana.add_argument("--platforms-file", default=None)
    ana.set_defaults(func=_cmd_analyze)

    val = sub.add_parser("validate", help="structural checks on a .tns file")
    val.add_argument("--input", required=True)
    val.add_argument("--block-size", type=int, default=None,
                     help="also validate the blocked form at this block size")
    val.add_argument("--precision", choices=sorted(PRECISIONS), default="f32")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
