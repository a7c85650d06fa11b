"""Worker pool sizing and order-preserving parallel map."""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV = "CCA_FUSE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(override: int | None = None) -> int:
    """Number of workers to use.

    An explicit override wins; otherwise CCA_FUSE_THREADS caps the pool,
    with 0 or unset meaning all cores.
    """
    if override is not None and override > 0:
        return override

    raw = os.environ.get(THREADS_ENV, "").strip()
    cores = os.cpu_count() or 1
    if not raw:
        return cores
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
        return cores
    if value <= 0:
        return cores
    return value


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    workers: int | None = None,
) -> list[R]:
    """Apply func to every item, returning results in input order.

    Exceptions propagate from the first failing item in input order.
    """
    work = list(items)
    count = worker_count(workers)
    if count == 1 or len(work) <= 1:
        return [func(item) for item in work]

    with ThreadPoolExecutor(max_workers=min(count, len(work))) as pool:
        return list(pool.map(func, work))
