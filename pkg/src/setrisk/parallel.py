"""Deterministic thread-pool map; worker count from RISKTOOL_THREADS (default 1)."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get("RISKTOOL_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items) -> list:
    """map(fn, items) with results in input order."""
    items = list(items)
    w = n_workers()
    if w == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))
