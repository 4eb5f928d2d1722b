"""Worker-thread plumbing.

Work is always cut into the same fixed chunks, whatever the worker count,
and each chunk writes to its own slice of a preallocated output.  Thread
count therefore changes scheduling only, never arithmetic.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

ENV_THREADS = "CORESET_THREADS"


def worker_count() -> int:
    """Number of worker threads, from ``CORESET_THREADS`` (0 or unset = auto)."""
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValueError(f"{ENV_THREADS} must be >= 0, got {value}")
    if value == 0:
        value = os.cpu_count() or 1
    return value


def chunk_bounds(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def run_chunks(fn: Callable[[int, int], None], total: int, chunk: int) -> None:
    """Call ``fn(start, stop)`` over fixed chunks of ``range(total)``.

    ``fn`` must only write to the rows ``start:stop`` of its outputs.
    """
    bounds = chunk_bounds(total, chunk)
    workers = min(worker_count(), len(bounds))
    if workers <= 1:
        for start, stop in bounds:
            fn(start, stop)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # list() re-raises the first worker exception
        list(pool.map(lambda b: fn(*b), bounds))
