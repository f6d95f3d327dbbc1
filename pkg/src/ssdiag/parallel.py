"""Chunked multiprocess execution with scheduling-independent results.

Work is split into fixed-size chunks whose boundaries never depend on the
worker count; per-chunk results are combined in chunk order, so any degree
of parallelism reproduces the serial output bit for bit.
"""

from __future__ import annotations

import os
from multiprocessing import get_context


def resolve_workers(workers: int | None = None) -> int:
    """Explicit worker count, else the SSDIAG_WORKERS env var, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("SSDIAG_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def chunk_bounds(n: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def map_chunks(fn, bounds, workers: int):
    """Apply fn to each (lo, hi) chunk, returning results in chunk order."""
    if workers <= 1 or len(bounds) <= 1:
        return [fn(b) for b in bounds]
    ctx = get_context("fork")
    with ctx.Pool(processes=min(workers, len(bounds))) as pool:
        return pool.map(fn, bounds)
