"""Tiny deterministic worker-pool helper for parameter sweeps."""

from concurrent.futures import ThreadPoolExecutor


def run_jobs(fn, items, threads: int = 1) -> list:
    """Map fn over items, preserving order regardless of completion order.

    Threads suffice here: the heavy kernels (LAPACK, BLAS) release the GIL,
    and shared inputs are immutable.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
