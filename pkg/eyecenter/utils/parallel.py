"""
Bounded worker parallelism with ordered results
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar('T')
R = TypeVar('R')


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    Apply fn to every item, at most `threads` at a time

    Results come back in input order, so any reduction over them is
    deterministic regardless of the worker count.

    Args:
        fn: Function applied to each item
        items: Input items
        threads: Maximum number of workers (1 runs inline)

    Returns:
        List of results in input order
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
