"""Worker-pool helper with a hard determinism guarantee.

``parallel_map`` preserves input order, so n threads produce exactly the
same sequence as one; callers may rely on byte-identical artifacts.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

from termweight.errors import EngineError

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> Iterator[R]:
    if threads < 1:
        raise EngineError(f"threads must be >= 1, got {threads}")
    if threads == 1:
        return map(fn, items)

    def gen() -> Iterator[R]:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(fn, items, chunksize=64)

    return gen()
