"""Order-preserving map over worker processes."""

import os
from concurrent.futures import ProcessPoolExecutor

ENV_THREADS = "LRROC_THREADS"


def resolve_workers(workers=None) -> int:
    """Explicit count, else ``$LRROC_THREADS``, else 1. ``0`` means all CPUs."""
    if workers is None:
        raw = os.environ.get(ENV_THREADS, "").strip()
        workers = int(raw) if raw else 1
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def pmap(fn, items, workers=None):
    items = list(items)
    workers = min(resolve_workers(workers), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
