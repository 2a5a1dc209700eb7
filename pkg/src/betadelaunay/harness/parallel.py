"""Ordered fan-out over a worker pool sized by the BDL_THREADS environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from ..errors import ConfigurationError

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("BDL_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"BDL_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigurationError(f"BDL_THREADS must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Apply ``fn`` to every item; results come back in input order whatever the pool size.

    Each task must draw from its own RngStream, so output does not depend on
    scheduling.
    """
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
