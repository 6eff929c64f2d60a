"""Seeded random substreams and block-parallel evaluation.

Monte Carlo work is split into fixed-size blocks; block ``b`` of a run keyed
by ``(seed, *key)`` always draws from ``SeedSequence([seed, *key, b])``.
Results therefore do not depend on how many threads evaluate the blocks or
in which order they finish.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .errors import ParameterError

BLOCK_SIZE = 8192
THREADS_ENV = "CONCLAB_THREADS"

T = TypeVar("T")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if value < 1:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([check_seed(seed), *key]))


def block_sizes(total: int, block: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(total, block)
    return [block] * full + ([rest] if rest else [])


def map_blocks(
    fn: Callable[[np.random.Generator, int], T],
    total: int,
    seed: int,
    key: Sequence[int] = (),
    block: int = BLOCK_SIZE,
) -> list[T]:
    """Evaluate ``fn(rng, size)`` on every block; results come back in block order."""
    sizes = block_sizes(total, block)
    jobs = [(substream(seed, *key, b), size) for b, size in enumerate(sizes)]
    threads = min(thread_count(), len(jobs)) if jobs else 1
    if threads <= 1:
        return [fn(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
