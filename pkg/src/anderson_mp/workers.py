"""Order-preserving parallel map over independent realizations."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "ANDERSON_MP_THREADS"


def resolve_workers(workers: int | None = None) -> int:
    """Explicit count, else ``ANDERSON_MP_THREADS``, else the CPU count (0 means default)."""
    if workers is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        try:
            workers = int(raw) if raw else 0
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ValueError(f"worker count must be >= 0, got {workers}")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, possibly on a thread pool; result order never changes."""
    items = list(items)
    n = resolve_workers(workers)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
