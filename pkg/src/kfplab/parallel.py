"""Deterministic ordered map over independent work items."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_limits


def ordered_map(fn, items, threads: int = 1) -> list:
    """Apply fn to every item and return results in input order.

    BLAS is pinned to one thread inside the map so that each item is computed
    with the same floating-point reduction order whatever the pool size.
    """
    items = list(items)
    with threadpool_limits(limits=1):
        if threads <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
