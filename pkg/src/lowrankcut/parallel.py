"""Deterministic batch engine shared by the exact solvers.

Work is cut into numbered batches drawn lazily from a single producer and
handed to a thread pool (the numeric kernels release the GIL). Results are
folded in batch order, and every winner comparison uses the total order
(objective, canonical labels), so the outcome does not depend on the worker
count or on scheduling.
"""

from __future__ import annotations

import itertools
import time
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, replace

MIN_BATCH = 1024


@dataclass(frozen=True)
class ParallelConfig:
    """Worker count, batch policy and an optional cooperative deadline.

    ``deadline`` is an absolute ``time.monotonic()`` value; it is checked
    between batches only.
    """

    workers: int = 1
    batch_size: int | None = None
    deadline: float | None = None

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch size must be positive")

    def resolve_batch(self, total: int) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return max(MIN_BATCH, -(-total // (64 * self.workers)))

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() >= self.deadline

    def with_timeout(self, seconds: float | None) -> "ParallelConfig":
        if seconds is None:
            return self
        return replace(self, deadline=time.monotonic() + seconds)


def chunked(stream: Iterable, size: int) -> Iterator[list]:
    it = iter(stream)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def run_batches(batches: Iterable, work: Callable, fold: Callable, init, cfg: ParallelConfig):
    """Apply ``work`` to every batch and fold results in batch order.

    Returns ``(accumulator, timed_out)``. When the deadline passes, no new
    batch is started and the fold covers the batches finished so far.
    """
    acc = init
    it = iter(batches)
    if cfg.workers == 1:
        for batch in it:
            if cfg.expired():
                return acc, True
            acc = fold(acc, work(batch))
        return acc, False

    timed_out = False
    pending: dict = {}
    done_results: dict[int, object] = {}
    next_fold = 0
    submitted = 0
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        exhausted = False
        while True:
            while not exhausted and len(pending) < 2 * cfg.workers:
                if cfg.expired():
                    timed_out = True
                    exhausted = True
                    break
                batch = next(it, None)
                if batch is None:
                    exhausted = True
                    break
                pending[pool.submit(work, batch)] = submitted
                submitted += 1
            if not pending:
                break
            finished, _ = wait(list(pending), return_when=FIRST_COMPLETED)
            for fut in finished:
                done_results[pending.pop(fut)] = fut.result()
            while next_fold in done_results:
                acc = fold(acc, done_results.pop(next_fold))
                next_fold += 1
    return acc, timed_out
