"""Chunked Monte Carlo moments with a schedule-independent reduction.

Trials are cut into fixed-size chunks by trial index. Each chunk yields
``(count, mean, M2)``; chunks are merged with Chan's pairwise update along a
balanced binary tree whose shape depends only on the number of chunks. The
worker pool only changes *when* chunks are computed, never how they combine,
so results are bit-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK = 4096
WORKERS_ENV = "DECOHERE_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return n
    return os.cpu_count() or 1


def _chunk_stats(x: np.ndarray):
    count = x.shape[0]
    mean = x.sum(axis=0) / count
    m2 = ((x - mean) ** 2).sum(axis=0)
    return count, mean, m2


def _merge(a, b):
    na, ma, qa = a
    nb, mb, qb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * (nb / n), qa + qb + delta * delta * (na * nb / n)


def _tree(stats: list):
    if len(stats) == 1:
        return stats[0]
    mid = len(stats) // 2
    return _merge(_tree(stats[:mid]), _tree(stats[mid:]))


def moments(
    features: Callable[[np.ndarray], np.ndarray],
    trials: int,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of ``features(trial_indices)`` over ``range(trials)``.

    ``features`` maps a ``uint64`` array of trial indices to a 2-D array with
    one row per trial.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials for a standard error")
    starts = range(0, trials, CHUNK)

    def run(start: int):
        idx = np.arange(start, min(start + CHUNK, trials), dtype=np.uint64)
        return _chunk_stats(np.asarray(features(idx), dtype=np.float64))

    workers = worker_count() if workers is None else workers
    if workers == 1 or len(starts) == 1:
        stats = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(run, starts))
    n, mean, m2 = _tree(stats)
    std_err = np.sqrt(m2 / (n - 1)) / np.sqrt(n)
    return mean, std_err
