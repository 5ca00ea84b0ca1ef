"""
Ordered parallel map over flux points.

Handles:
- Worker-count resolution (explicit cap or os.cpu_count())
- Thread-pool evaluation with results in input order

Eigensolves spend their time inside LAPACK, which releases the GIL, so a
thread pool is enough. Results are returned in input order, which keeps every
sweep identical to its serial evaluation.
"""

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(requested: Optional[int], n_items: int) -> int:
    """
    Number of worker threads for `n_items` tasks.

    Args:
        requested: explicit cap; None or 0 means os.cpu_count()
        n_items: number of tasks

    Returns:
        At least 1, never more than n_items
    """
    if requested is not None and requested < 0:
        raise ValueError(f"worker count must be >= 0, got {requested}")
    cap = requested or os.cpu_count() or 1
    return max(1, min(cap, n_items))


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    workers: Optional[int] = None,
) -> list[R]:
    """
    Apply `fn` to every item and return the results in input order.

    The first exception raised by `fn` propagates to the caller.
    """
    items = list(items)
    n_workers = resolve_workers(workers, len(items))
    if n_workers == 1:
        return [fn(item) for item in items]

    logger.debug(f"Evaluating {len(items)} points on {n_workers} threads")
    with ThreadPoolExecutor(max_workers=n_workers, thread_name_prefix="flatsonium") as pool:
        return list(pool.map(fn, items))
