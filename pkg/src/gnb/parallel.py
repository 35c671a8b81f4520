"""Row-blocked evaluation of O(N^2) sums.

Each block is computed independently and results are reassembled in block
order, so output is bitwise identical for any thread count.  ``GNB_THREADS``
selects the pool size (0 = auto, 1 = sequential).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_ELEMS = 1 << 20


def thread_count() -> int:
    raw = os.environ.get("GNB_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"GNB_THREADS must be an integer, got {raw!r}") from None
    if k <= 0:
        k = os.cpu_count() or 1
    return k


def blocks(N: int):
    step = max(1, BLOCK_ELEMS // N)
    return [np.arange(i, min(i + step, N)) for i in range(0, N, step)]


def map_rows(fn, N: int) -> np.ndarray:
    """Concatenate ``fn(rows)`` over row blocks of 0..N-1."""
    parts = blocks(N)
    k = thread_count()
    if k == 1 or len(parts) == 1:
        out = [fn(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=k) as ex:
            out = list(ex.map(fn, parts))
    return np.concatenate(out)
