"""
Worker Pool
Ordered fan-out of independent tasks; results come back in task order
"""

from collections import deque
from concurrent.futures import ProcessPoolExecutor
from itertools import islice
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from app.core.config import settings


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        return settings.get_threads()
    return max(1, int(threads))


def iter_ordered(fn: Callable[..., Any], tasks: Sequence[Tuple], threads: Optional[int] = None) -> Iterator[Any]:
    """
    Yield fn(*task) for every task, in task order.
    At most one task per worker is in flight, so no more than `workers`
    unconsumed results exist at any time.
    """
    workers = min(resolve_threads(threads), len(tasks))
    if workers <= 1:
        for task in tasks:
            yield fn(*task)
        return

    logger.debug("fanning out {} tasks of {} over {} workers", len(tasks), fn.__name__, workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        pending = iter(tasks)
        window = deque(executor.submit(fn, *task) for task in islice(pending, workers))
        while window:
            result = window.popleft().result()
            task = next(pending, None)
            if task is not None:
                window.append(executor.submit(fn, *task))
            yield result


def run_ordered(fn: Callable[..., Any], tasks: Sequence[Tuple], threads: Optional[int] = None) -> List[Any]:
    """Run fn(*task) for every task; inline when one worker suffices"""
    return list(iter_ordered(fn, tasks, threads))


def split_range(lo: int, hi: int, parts: int) -> List[Tuple[int, int]]:
    """Split the inclusive range [lo, hi] into at most `parts` contiguous blocks"""
    if hi < lo:
        return []
    parts = max(1, min(parts, hi - lo + 1))
    size, extra = divmod(hi - lo + 1, parts)
    blocks, start = [], lo
    for i in range(parts):
        end = start + size + (1 if i < extra else 0) - 1
        blocks.append((start, end))
        start = end + 1
    return blocks
