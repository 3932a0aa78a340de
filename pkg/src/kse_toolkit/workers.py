"""Deterministic fan-out helpers.

Per-layer analysis, per-channel clustering and per-image studies are
independent tasks. They run on a thread pool and are gathered back in
input order, so results never depend on the schedule or the worker count.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_worker_count(worker_count: int | None) -> int:
    """Return the effective number of workers.

    Parameters
    ----------
    worker_count : int or None
        Requested worker count. None or values below one select the
        available parallelism of the machine.

    Returns
    -------
    int
        Worker count ``>= 1``.
    """
    if worker_count is None or worker_count < 1:
        return max(1, os.cpu_count() or 1)
    return worker_count


def ordered_map(
    fn: Callable[[T], R],
    items: Sequence[T],
    worker_count: int | None = 1,
) -> list[R]:
    """Apply ``fn`` to every item and return results in input order.

    Parameters
    ----------
    fn : Callable[[T], R]
        Pure function applied to each item.
    items : Sequence[T]
        Inputs to process.
    worker_count : int or None, default=1
        Number of threads. One runs serially in the calling thread.

    Returns
    -------
    list[R]
        ``[fn(item) for item in items]`` regardless of completion order.

    Raises
    ------
    Exception
        The exception of the lowest-indexed failing item is re-raised.

    Examples
    --------
    >>> ordered_map(lambda x: x * x, [1, 2, 3], worker_count=2)
    [1, 4, 9]
    """
    workers = resolve_worker_count(worker_count)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]

    results: dict[int, R] = {}
    failures: dict[int, BaseException] = {}
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as executor:
        futures = {executor.submit(fn, item): idx for idx, item in enumerate(items)}
        for future in as_completed(futures):
            idx = futures[future]
            exc = future.exception()
            if exc is not None:
                failures[idx] = exc
            else:
                results[idx] = future.result()

    if failures:
        raise failures[min(failures)]
    return [results[idx] for idx in range(len(items))]


__all__ = ["resolve_worker_count", "ordered_map"]
