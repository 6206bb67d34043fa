"""Deterministic chunked evaluation with an optional thread pool."""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "HYPERMARKOV_THREADS"
_threads_override = None


def set_threads(n):
    """Cap worker threads for this process (``None`` restores the default)."""
    global _threads_override
    _threads_override = None if n is None else max(1, int(n))


def default_threads() -> int:
    if _threads_override is not None:
        return _threads_override
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return 1


def chunked_map(func, start, stop, chunk=1 << 16, threads=None):
    """Evaluate ``func(np.arange(a, b))`` over consecutive chunks of
    ``[start, stop)`` and concatenate in index order.

    The result does not depend on the number of threads.
    """
    bounds = [(a, min(a + chunk, stop)) for a in range(start, stop, chunk)]
    if not bounds:
        return func(np.arange(start, start))
    threads = default_threads() if threads is None else threads
    work = [np.arange(a, b, dtype=np.int64) for a, b in bounds]
    if threads <= 1 or len(work) == 1:
        parts = [func(w) for w in work]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(func, work))
    return np.concatenate(parts)
