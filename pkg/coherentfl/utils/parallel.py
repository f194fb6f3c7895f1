"""
Ordered fan-out over a thread pool.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from coherentfl.config import get_thread_count

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every item and return the results in input order.

    Runs inline when only one thread is allowed.
    """
    items = list(items)
    workers = min(threads or get_thread_count(), max(1, len(items)))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
