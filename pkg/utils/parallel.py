import concurrent.futures
import logging
from typing import Callable, List, Optional, Sequence, TypeVar

from config.settings import get_thread_count

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item on a thread pool, returning results in input order.

    The first exception raised by any call propagates after the pool drains.
    """
    items = list(items)
    workers = min(max_workers or get_thread_count(), max(len(items), 1))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug("mapping %d items over %d threads", len(items), workers)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [future.result() for future in futures]
