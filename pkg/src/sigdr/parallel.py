"""Process-wide worker pool sizing and an order-preserving parallel map.

Hot kernels release the GIL, so threads are enough. Results never depend on
the worker count: work units are independent and reductions happen afterwards
in a fixed order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_threads: int | None = None


def set_threads(n: int | None) -> None:
    global _threads
    if n is not None and n < 1:
        raise ValueError(f"threads must be >= 1, got {n}")
    _threads = n


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("SIGDR_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"SIGDR_THREADS must be an integer, got {env!r}") from None
        if n >= 1:
            return n
    return os.cpu_count() or 1


def pmap(fn, items, threads: int | None = None) -> list:
    items = list(items)
    n = threads or get_threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
