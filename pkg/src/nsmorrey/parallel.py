"""Ordered parallel map used by the slice and ladder loops.

Results always come back in input order and every reduction downstream runs
sequentially over that order, so output is independent of the worker count.
"""

import os
import threading
from concurrent.futures import ThreadPoolExecutor

WORKERS_ENV = "NSMORREY_WORKERS"

_local = threading.local()


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    return os.cpu_count() or 1


def _run_nested(fn):
    def wrapped(item):
        _local.inside = True
        try:
            return fn(item)
        finally:
            _local.inside = False
    return wrapped


def ordered_map(fn, items, workers=None):
    """``[fn(x) for x in items]``, possibly on a thread pool.

    Calls made from inside a pool worker run serially, so nested maps (a scan
    over centers, each evaluating slices) do not multiply threads.
    """
    items = list(items)
    n = worker_count() if workers is None else int(workers)
    if n <= 1 or len(items) <= 1 or getattr(_local, "inside", False):
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(_run_nested(fn), items))
