"""Seeding and worker-pool helpers shared across modules."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "ETHLAB_THREADS"


def state_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for ensemble member `index`; order-insensitive."""
    return np.random.default_rng(np.random.SeedSequence((int(master_seed), int(index))))


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def worker_map(fn, items):
    """Order-preserving map over independent work items.

    Uses a thread pool of ETHLAB_THREADS workers (numpy releases the GIL in
    BLAS kernels).  Results are identical to the sequential map regardless of
    the worker count.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
