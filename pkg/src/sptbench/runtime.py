"""Worker-count resolution and thread plumbing shared by the kernels.

A kernel's ``workers`` argument controls how work is *partitioned* (and, for
privatized reductions, how many private buffers exist).  The number of OS
threads actually used is ``min(workers, available hardware threads)``, so
results depend only on the requested worker count, never on the machine the
code happens to run on.
"""
from __future__ import annotations

import contextlib
import os

import numba
import psutil

#: Environment variable consulted for the default worker count.
WORKERS_ENV_VAR = "SPTBENCH_WORKERS"


def default_workers() -> int:
    """Default worker count: ``SPTBENCH_WORKERS`` if set, else physical cores."""
    env = os.environ.get(WORKERS_ENV_VAR)
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(
                f"{WORKERS_ENV_VAR} must be a positive integer, got {env!r}"
            ) from exc
        if value < 1:
            raise ValueError(f"{WORKERS_ENV_VAR} must be >= 1, got {value}")
        return value
    physical = psutil.cpu_count(logical=False)
    return physical or os.cpu_count() or 1


def resolve_workers(workers: int | None) -> int:
    """Normalize a ``workers`` argument (``None`` means the default)."""
    if workers is None:
        return default_workers()
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


@contextlib.contextmanager
def numba_threads(workers: int):
    """Run a block with at most ``workers`` numba threads, then restore.

    The hardware may offer fewer threads than requested; the partitioning of
    work (and therefore the numerical result) is unaffected by that cap.
    """
    cap = numba.config.NUMBA_NUM_THREADS
    want = max(1, min(workers, cap))
    previous = numba.get_num_threads()
    numba.set_num_threads(want)
    try:
        yield want
    finally:
        numba.set_num_threads(previous)


def chunk_bounds(n: int, workers: int):
    """Split ``range(n)`` into ``workers`` contiguous chunks.

    Returns an int64 array of ``workers + 1`` boundaries.  The split depends
    only on ``n`` and ``workers`` so partitioned reductions are reproducible.
    """
    import numpy as np

    workers = max(1, int(workers))
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    bounds[0] = 0
    bounds[-1] = n
    return bounds
