"""Synthetic sparse tensor generators and degree-distribution tools.

Two families:

* ``kronecker_generate`` — recursive-descent sampling from an iterated
  Kronecker product of a small nonnegative initiator tensor.  Each sample
  picks one initiator cell per level (probability proportional to the cell
  weight) and concatenates the digits into a coordinate, which concentrates
  mass in self-similar corners of the space.
* ``powerlaw_generate`` — independent draws per mode: sparse modes follow a
  discrete power law with exponent ``alpha`` over ``[1, dim]``; dense modes
  are uniform over a small extent, with a bounded re-draw loop that keeps
  re-sampling (never patching) until every dense index value is present.

Both are deterministic functions of their spec: random streams are derived
from the seed with counter-style spawn keys, so draw batch ``k`` is the same
no matter how many batches preceded it.  Duplicate coordinates accumulate by
summing values, so the resulting nonzero count can be below the draw count.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .blocked import GHicooTensor, HicooTensor, blocked_full_inds
from .coo import DEFAULT_VALUE_DTYPE, MAX_DIM, CooTensor, coo_from_arrays


def _stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible stream ``key`` of the root ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# --------------------------------------------------------------------------
# Kronecker (recursive descent)
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class KroneckerSpec:
    """Parameters of a Kronecker-product tensor sample.

    ``initiator`` is a small order-``N`` array of nonnegative cell weights;
    ``iterations`` Kronecker powers of it span a space of
    ``initiator.shape[m] ** iterations`` per mode, from which
    ``sample_count`` coordinates are drawn.  Samples outside ``target_dims``
    are discarded (the target may not exceed the spanned space).
    """

    initiator: np.ndarray
    iterations: int
    target_dims: tuple[int, ...]
    sample_count: int
    seed: int = 0

    def __post_init__(self):
        initiator = np.ascontiguousarray(np.asarray(self.initiator, dtype=np.float64))
        if initiator.ndim < 1 or any(d < 1 for d in initiator.shape):
            raise ValueError("initiator must be a non-empty N-dimensional array")
        if not np.all(np.isfinite(initiator)) or np.any(initiator < 0) or np.any(initiator > 1):
            raise ValueError("initiator cell probabilities must lie in [0, 1]")
        if initiator.sum() <= 0:
            raise ValueError("initiator probabilities must not all be zero")
        object.__setattr__(self, "initiator", initiator)
        if int(self.iterations) < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        object.__setattr__(self, "iterations", int(self.iterations))
        dims = tuple(int(d) for d in self.target_dims)
        if len(dims) != initiator.ndim:
            raise ValueError(
                f"target_dims has {len(dims)} modes but the initiator has "
                f"{initiator.ndim}"
            )
        for m, (d, base) in enumerate(zip(dims, initiator.shape)):
            if d < 1:
                raise ValueError(f"target dim of mode {m} must be >= 1, got {d}")
            if d > MAX_DIM:
                raise ValueError(f"target dim of mode {m} exceeds 32-bit index range")
            spanned = base**self.iterations
            if d > spanned:
                raise ValueError(
                    f"target dim {d} of mode {m} exceeds the spanned extent "
                    f"{base}^{self.iterations} = {spanned}"
                )
        object.__setattr__(self, "target_dims", dims)
        if int(self.sample_count) < 0:
            raise ValueError("sample_count must be >= 0")
        object.__setattr__(self, "sample_count", int(self.sample_count))

    @property
    def order(self) -> int:
        return self.initiator.ndim

    @property
    def spanned_dims(self) -> tuple[int, ...]:
        return tuple(b**self.iterations for b in self.initiator.shape)


def kronecker_sample(spec: KroneckerSpec) -> np.ndarray:
    """Raw coordinate stream of the descent, before target-dims stripping.

    Returns an ``(order, sample_count)`` int64 array over the full spanned
    space.  Exposed separately so the sampling distribution itself can be
    checked against exact cell probabilities.
    """
    rng = _stream_rng(spec.seed, 0, 0)
    shape = spec.initiator.shape
    weights = spec.initiator.ravel()
    p = weights / weights.sum()
    cells = rng.choice(p.size, size=(spec.iterations, spec.sample_count), p=p)
    digits = np.unravel_index(cells, shape)
    coords = np.zeros((spec.order, spec.sample_count), dtype=np.int64)
    for m, base in enumerate(shape):
        scale = 1
        for level in range(spec.iterations - 1, -1, -1):
            coords[m] += digits[m][level].astype(np.int64) * scale
            scale *= base
    return coords


def kronecker_generate(spec: KroneckerSpec, *, dtype=DEFAULT_VALUE_DTYPE) -> CooTensor:
    """Sample a sparse tensor from the Kronecker model.

    Values are uniform on ``(0, 1]``; duplicate coordinates accumulate, so
    ``nnz <= sample_count``.
    """
    coords = kronecker_sample(spec)
    bound = np.asarray(spec.target_dims, dtype=np.int64)[:, None]
    keep = np.all(coords < bound, axis=0)
    coords = coords[:, keep]
    vrng = _stream_rng(spec.seed, 1)
    vals = (1.0 - vrng.random(coords.shape[1])).astype(dtype)
    return coo_from_arrays(spec.target_dims, coords, vals, dtype=dtype)


# --------------------------------------------------------------------------
# Power law with dense modes
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class PowerLawSpec:
    """Parameters of a power-law tensor sample.

    Sparse-mode indices are drawn from ``P(i) ∝ i**-alpha`` over the 1-based
    ranks ``1..dim`` (stored 0-based); ``dense_modes`` are drawn uniformly
    and guaranteed full coverage.  ``nnz_target`` is the number of raw
    coordinate draws; the accumulated tensor has at most that many nonzeros.

    At least two modes must stay sparse, and dense modes are capped at
    extent 1024 — "dense" here means a small mode every index of which
    occurs, not a large uniformly filled one.
    """

    dims: tuple[int, ...]
    nnz_target: int
    alpha: float = 2.0
    dense_modes: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1:
            raise ValueError("dims must have at least one mode")
        for m, d in enumerate(dims):
            if d < 1:
                raise ValueError(f"dim of mode {m} must be >= 1, got {d}")
            if d > MAX_DIM:
                raise ValueError(f"dim of mode {m} exceeds 32-bit index range")
        object.__setattr__(self, "dims", dims)
        dense = tuple(sorted(int(m) for m in self.dense_modes))
        if len(set(dense)) != len(dense) or any(not 0 <= m < len(dims) for m in dense):
            raise ValueError(
                f"dense_modes {dense} must be distinct modes of an "
                f"order-{len(dims)} tensor"
            )
        if len(dims) - len(dense) < 2:
            raise ValueError("at least two modes must stay sparse")
        for m in dense:
            if dims[m] > 1024:
                raise ValueError(
                    f"dense mode {m} has extent {dims[m]}; dense modes are "
                    f"meant to be small (<= 1024)"
                )
        object.__setattr__(self, "dense_modes", dense)
        if int(self.nnz_target) < 1:
            raise ValueError("nnz_target must be >= 1")
        object.__setattr__(self, "nnz_target", int(self.nnz_target))
        largest_dense = max((dims[m] for m in dense), default=0)
        if self.nnz_target < largest_dense:
            raise ValueError(
                f"nnz_target {self.nnz_target} cannot cover a dense mode of "
                f"size {largest_dense}"
            )
        if not float(self.alpha) > 1.0:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def sparse_modes(self) -> tuple[int, ...]:
        dense = set(self.dense_modes)
        return tuple(m for m in range(self.order) if m not in dense)


def _powerlaw_cdf(dim: int, alpha: float) -> np.ndarray:
    weights = np.arange(1, dim + 1, dtype=np.float64) ** (-alpha)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


#: Extra coordinate draws allowed while covering dense modes, per unit of
#: the largest dense extent.
COVERAGE_REDRAW_FACTOR = 100


def _draw_coords(spec: PowerLawSpec, cdfs: dict, rng: np.random.Generator, count: int) -> np.ndarray:
    coords = np.empty((spec.order, count), dtype=np.int64)
    for m in range(spec.order):
        if m in spec.dense_modes:
            coords[m] = rng.integers(0, spec.dims[m], size=count)
        else:
            coords[m] = np.searchsorted(cdfs[m], rng.random(count), side="right")
    return coords


def powerlaw_generate(spec: PowerLawSpec, *, dtype=DEFAULT_VALUE_DTYPE) -> CooTensor:
    """Sample a sparse tensor with power-law sparse modes and dense modes.

    Exactly ``nnz_target`` coordinate draws are kept.  If some dense index
    value never came up, draws whose dense values are covered elsewhere are
    replaced by fresh samples from the same distribution until coverage
    holds; the replacement budget is ``100 *`` the largest dense extent, and
    exhausting it raises.
    """
    cdfs = {m: _powerlaw_cdf(spec.dims[m], spec.alpha) for m in spec.sparse_modes}
    coords = _draw_coords(spec, cdfs, _stream_rng(spec.seed, 0, 0), spec.nnz_target)
    if spec.dense_modes:
        counts = {
            m: np.bincount(coords[m], minlength=spec.dims[m])
            for m in spec.dense_modes
        }
        missing = {m: set(np.flatnonzero(counts[m] == 0)) for m in spec.dense_modes}
        budget = COVERAGE_REDRAW_FACTOR * max(spec.dims[m] for m in spec.dense_modes)
        used = 0
        batch_no = 1
        victim_cursor = 0
        while any(missing.values()) and used < budget:
            want = min(max(16, sum(len(s) for s in missing.values()) * 4), budget - used)
            extras = _draw_coords(spec, cdfs, _stream_rng(spec.seed, 0, batch_no), want)
            batch_no += 1
            used += want
            for j in range(want):
                col = extras[:, j]
                if not any(int(col[m]) in missing[m] for m in spec.dense_modes):
                    continue
                # Replace a draw whose dense values are all duplicated, so
                # removing it cannot uncover anything.
                while victim_cursor < spec.nnz_target and not all(
                    counts[m][coords[m, victim_cursor]] >= 2 for m in spec.dense_modes
                ):
                    victim_cursor += 1
                if victim_cursor >= spec.nnz_target:
                    break
                for m in spec.dense_modes:
                    old = int(coords[m, victim_cursor])
                    counts[m][old] -= 1
                    new = int(col[m])
                    counts[m][new] += 1
                    missing[m].discard(new)
                coords[:, victim_cursor] = col
                victim_cursor += 1
        still = {m: s for m, s in missing.items() if s}
        if still:
            detail = ", ".join(
                f"mode {m}: {len(s)} of {spec.dims[m]} values" for m, s in still.items()
            )
            raise ValueError(
                f"could not cover dense modes within the re-draw budget ({detail}); "
                f"increase nnz_target"
            )
    vrng = _stream_rng(spec.seed, 1)
    vals = (1.0 - vrng.random(spec.nnz_target)).astype(dtype)
    return coo_from_arrays(spec.dims, coords, vals, dtype=dtype)


# --------------------------------------------------------------------------
# Degree histograms and power-law fitting
# --------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class DegreeHistogram:
    """How many index values of one mode appear with each nonzero count.

    ``degrees`` are the distinct per-index occurrence counts (ascending,
    zero excluded); ``frequencies[k]`` is the number of index values whose
    occurrence count equals ``degrees[k]``.  Summing ``degrees *
    frequencies`` recovers the tensor's nnz.
    """

    mode: int
    degrees: np.ndarray
    frequencies: np.ndarray

    @property
    def counts(self) -> dict[int, int]:
        return {int(d): int(f) for d, f in zip(self.degrees, self.frequencies)}

    @property
    def total_nnz(self) -> int:
        return int(np.sum(self.degrees.astype(np.int64) * self.frequencies))


def mode_degree_histogram(t, n: int) -> DegreeHistogram:
    """Degree histogram of mode ``n`` of a COO or blocked tensor."""
    if isinstance(t, (HicooTensor, GHicooTensor)):
        inds = blocked_full_inds(t)
    elif isinstance(t, CooTensor):
        inds = t.inds
    else:
        raise TypeError(f"cannot build a degree histogram of {type(t).__name__}")
    if not 0 <= int(n) < t.order:
        raise ValueError(f"mode {n} out of range for an order-{t.order} tensor")
    per_index = np.bincount(inds[int(n)], minlength=t.dims[int(n)])
    per_index = per_index[per_index > 0]
    degrees, frequencies = np.unique(per_index, return_counts=True)
    return DegreeHistogram(int(n), degrees.astype(np.int64), frequencies.astype(np.int64))


@dataclasses.dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through ``log(degree)`` vs ``log(frequency)``."""

    slope: float
    intercept: float
    r_squared: float

    def looks_powerlaw(self, min_r_squared: float = 0.8) -> bool:
        """Negative slope with enough of the variance explained."""
        return self.slope < 0 and self.r_squared >= min_r_squared


def powerlaw_fit(hist: DegreeHistogram, *, bin_base: float | None = None) -> PowerLawFit:
    """Fit a power law to a degree histogram in log-log space.

    Needs at least three distinct degrees.  A flat histogram fits with a
    near-zero slope (and, if exactly flat, an ``r_squared`` of 0), which
    ``looks_powerlaw`` reports as non-power-law.

    By default every distinct degree is one fit point, which recovers the
    exponent of an exactly synthesized histogram.  For *sampled* data that
    estimator is dominated by the unique giant degrees in the tail (long
    runs of frequency-1 points flatten the line no matter how clean the
    underlying law is); pass ``bin_base`` (e.g. ``2.0``) to group degrees
    into geometric bins and fit frequency *density* per bin instead — the
    usual way empirical degree histograms are judged.
    """
    if hist.degrees.size < 3:
        raise ValueError(
            f"power-law fit needs >= 3 distinct degrees, got {hist.degrees.size}"
        )
    degrees = hist.degrees.astype(np.float64)
    frequencies = hist.frequencies.astype(np.float64)
    if bin_base is not None:
        if not bin_base > 1.0:
            raise ValueError(f"bin_base must be > 1, got {bin_base}")
        level = np.floor(np.log(degrees) / np.log(bin_base)).astype(np.int64)
        live = np.unique(level)
        lo = bin_base**live
        hi = bin_base ** (live + 1.0)
        mass = np.array([frequencies[level == lv].sum() for lv in live])
        degrees = np.sqrt(lo * hi)
        frequencies = mass / (hi - lo)
        if degrees.size < 3:
            raise ValueError(
                f"power-law fit needs >= 3 occupied bins, got {degrees.size}"
            )
    x = np.log(degrees)
    y = np.log(frequencies)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_res = float(np.dot(residual, residual))
    centered = y - y.mean()
    ss_tot = float(np.dot(centered, centered))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return PowerLawFit(float(slope), float(intercept), float(r_squared))
