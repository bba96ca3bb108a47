"""Small shared helpers: bounded thread fan-out and table formatting."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_budget() -> int:
    """Worker cap from SENTGRAPH_THREADS; 1 (serial) when unset or invalid."""
    raw = os.environ.get("SENTGRAPH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Order-preserving map, fanned out over threads when the budget allows.

    Results are collected in input order so downstream output stays
    byte-reproducible regardless of scheduling.
    """
    workers = thread_budget()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def format_table(header: Sequence[str], rows: Iterable[Sequence[str]], pad: int = 2) -> str:
    """Fixed-width text table."""
    rows = [list(map(str, r)) for r in rows]
    widths = [len(h) for h in header]
    for r in rows:
        for i, cell in enumerate(r):
            widths[i] = max(widths[i], len(cell))
    fmt = (" " * pad).join("{:<%d}" % w for w in widths)
    lines = [fmt.format(*header), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines)
