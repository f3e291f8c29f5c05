"""Text coordinate-file I/O (``.tns``).

One nonzero per line: the 1-based indices of every mode followed by the
value, whitespace-separated.  ``#`` starts a comment line and blank lines
are ignored.  Dims are taken from an optional ``# dims: I1 I2 ...`` header
(our extension — hyper-sparse tensors need it, since trailing empty slices
are invisible to inference) and otherwise inferred as per-mode index maxima.

``write_tns`` emits the header, then nonzeros in lexicographic coordinate
order with values at 9 significant digits — enough to round-trip f32 values
exactly; f64 tensors round-trip only to that precision.  Output is a pure
function of the tensor, so repeated writes are byte-identical.
"""
from __future__ import annotations

import io
import os
from importlib import resources
from typing import Sequence

import numpy as np

from .coo import DEFAULT_VALUE_DTYPE, MAX_DIM, CooTensor, coo_from_arrays, lex_sort

_DIMS_PREFIX = "dims:"


def _parse_dims_header(body: str, lineno: int) -> tuple[int, ...]:
    try:
        dims = tuple(int(tok) for tok in body.split())
    except ValueError:
        raise ValueError(f"line {lineno}: malformed dims header {body!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"line {lineno}: dims header needs positive sizes, got {body!r}")
    return dims


def _bad_line(payload: list[tuple[int, str]], ncols: int) -> int:
    """File line number of the first row that does not parse cleanly."""
    for lineno, line in payload:
        toks = line.split()
        if len(toks) != ncols:
            return lineno
        try:
            for tok in toks:
                float(tok)
        except ValueError:
            return lineno
    return payload[0][0]


def read_tns(source, *, dtype=DEFAULT_VALUE_DTYPE) -> CooTensor:
    """Parse a coordinate file into a COO tensor (duplicates accumulate).

    ``source`` is a path or a text file object.  Malformed content raises
    ``ValueError`` naming the offending line.
    """
    if isinstance(source, (str, bytes, os.PathLike)):
        with open(source, "r", encoding="utf-8") as f:
            return read_tns(f, dtype=dtype)

    declared_dims = None
    payload: list[tuple[int, str]] = []
    for lineno, raw in enumerate(source, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith(_DIMS_PREFIX) and declared_dims is None:
                declared_dims = _parse_dims_header(body[len(_DIMS_PREFIX):], lineno)
            continue
        payload.append((lineno, line))

    if not payload:
        if declared_dims is None:
            raise ValueError("empty file with no dims header: cannot infer dims")
        order = len(declared_dims)
        return coo_from_arrays(
            declared_dims, np.empty((order, 0), dtype=np.int64), np.empty(0), dtype=dtype
        )

    ncols = len(payload[0][1].split())
    if ncols < 2:
        raise ValueError(
            f"line {payload[0][0]}: need at least one index and a value per entry"
        )
    try:
        data = np.loadtxt([line for _, line in payload], dtype=np.float64, ndmin=2)
    except ValueError:
        raise ValueError(
            f"line {_bad_line(payload, ncols)}: malformed entry"
        ) from None
    if data.shape[1] != ncols:
        raise ValueError(f"line {_bad_line(payload, ncols)}: malformed entry")

    idx = data[:, :-1]
    vals = data[:, -1]
    integral = idx == np.floor(idx)
    if not integral.all():
        row = int(np.flatnonzero(~integral.all(axis=1))[0])
        raise ValueError(f"line {payload[row][0]}: non-integer index")
    if (idx < 1).any():
        row = int(np.flatnonzero((idx < 1).any(axis=1))[0])
        raise ValueError(f"line {payload[row][0]}: indices are 1-based and must be >= 1")
    if (idx > MAX_DIM).any():
        row = int(np.flatnonzero((idx > MAX_DIM).any(axis=1))[0])
        raise ValueError(f"line {payload[row][0]}: index exceeds 32-bit range")

    inds = idx.astype(np.int64).T - 1
    maxima = tuple(int(m) + 1 for m in inds.max(axis=1))
    if declared_dims is None:
        dims = maxima
    else:
        if len(declared_dims) != ncols - 1:
            raise ValueError(
                f"dims header has {len(declared_dims)} sizes but entries have "
                f"{ncols - 1} indices"
            )
        over = [m for m in range(ncols - 1) if maxima[m] > declared_dims[m]]
        if over:
            m = over[0]
            raise ValueError(
                f"mode {m} has index {maxima[m]} beyond declared dim {declared_dims[m]}"
            )
        dims = declared_dims
    return coo_from_arrays(dims, inds, vals, dtype=dtype)


def bundled_tensors() -> dict[str, CooTensor]:
    """The small example tensors shipped with the package, by name.

    Each file's header comment records the exact ``sptbench generate``
    command that produced it.
    """
    data = resources.files("sptbench").joinpath("data")
    out = {}
    for entry in sorted(data.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".tns"):
            out[entry.name[:-4]] = read_tns(io.StringIO(entry.read_text()))
    return out


def write_tns(t: CooTensor, dest) -> None:
    """Write a COO tensor as a coordinate file (see module docstring)."""
    if isinstance(dest, (str, bytes, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="\n") as f:
            write_tns(t, f)
            return
    ts = t if t.sort.is_natural(t.order) else lex_sort(t)
    dest.write("# dims: " + " ".join(str(d) for d in t.dims) + "\n")
    if ts.nnz == 0:
        return
    table = np.column_stack(
        [ts.inds.T.astype(np.float64) + 1.0, ts.vals.astype(np.float64)]
    )
    np.savetxt(dest, table, fmt=["%d"] * ts.order + ["%.9g"], delimiter=" ")
