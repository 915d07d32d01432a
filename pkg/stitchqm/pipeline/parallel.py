"""ABOUTME: Ordered map over pixel tasks, serially or in a process pool.
ABOUTME: Results come back in task order, so outputs do not depend on the worker count."""

from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_tasks(func: Callable[[T], R], tasks: Iterable[T], n_workers: int = 1) -> list[R]:
    """Apply ``func`` to every task; ``func`` must be picklable when ``n_workers > 1``."""
    items = list(tasks)
    if n_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    chunksize = max(1, len(items) // (4 * n_workers))
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
