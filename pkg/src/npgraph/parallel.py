"""Process-level fan-out for independent chains (configs, replications)."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "NPGRAPH_THREADS"


def worker_count(n_jobs: int, requested: int | None = None) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            pass
    if requested is not None:
        cap = min(cap, max(1, requested))
    return max(1, min(cap, n_jobs))


def map_jobs(fn: Callable[[T], R], jobs: Iterable[T], workers: int | None = None) -> list[R]:
    """Ordered map; runs inline when only one worker is available.

    Results do not depend on the worker count because every job carries its
    own seed.
    """
    jobs = list(jobs)
    n = worker_count(len(jobs), workers)
    if n <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, jobs))
