"""Small shared helpers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable


def thread_map(fn: Callable[[int], None], count: int, workers: int) -> None:
    """Run ``fn(i)`` for ``i in range(count)``, optionally on a thread pool.

    Each call writes to its own output slot, so results are identical for
    any worker count; the heavy kernels (ndimage, FFT) release the GIL.
    """
    if workers <= 1 or count <= 1:
        for i in range(count):
            fn(i)
        return
    with ThreadPoolExecutor(max_workers=min(workers, count)) as pool:
        list(pool.map(fn, range(count)))
