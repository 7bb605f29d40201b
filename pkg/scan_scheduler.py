from __future__ import annotations

import logging
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

LOGGER = logging.getLogger(__name__)

__all__ = ["ScanCancelledError", "ScanScheduler"]

T = TypeVar("T")
R = TypeVar("R")


class ScanCancelledError(RuntimeError):
    """Raised for work items skipped after the scheduler was cancelled."""


class ScanScheduler:
    """Evaluates independent work items (grid points, trials) on a thread pool.

    Results always come back in submission order, so the output does not
    depend on the number of threads.
    """

    def __init__(self, threads: int = 1) -> None:
        if threads < 1:
            raise ValueError("threads must be at least 1")
        self.threads = threads
        self._stop_event = threading.Event()
        self._lock = threading.Lock()
        self._executor: ThreadPoolExecutor | None = None
        self._started = False

    def start(self) -> None:
        with self._lock:
            if self._started:
                return
            self._started = True
            self._stop_event.clear()
            if self.threads > 1:
                self._executor = ThreadPoolExecutor(
                    max_workers=self.threads, thread_name_prefix="scan"
                )
        LOGGER.debug("Scan scheduler started with %d thread(s)", self.threads)

    def stop(self) -> None:
        self._stop_event.set()
        with self._lock:
            executor, self._executor = self._executor, None
            self._started = False
        if executor is not None:
            executor.shutdown(wait=True, cancel_futures=True)
        LOGGER.debug("Scan scheduler stopped")

    def cancel(self) -> None:
        """Skip every work item that has not started yet."""
        self._stop_event.set()

    @property
    def cancelled(self) -> bool:
        return self._stop_event.is_set()

    def __enter__(self) -> "ScanScheduler":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()

    def _guarded(self, func: Callable[[T], R], item: T) -> R:
        if self._stop_event.is_set():
            raise ScanCancelledError("scan cancelled before this item started")
        return func(item)

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply ``func`` to every item; the first failure cancels the rest and is re-raised."""

        items: Sequence[T] = list(items)
        self.start()
        executor = self._executor
        if executor is None:
            results = []
            for item in items:
                results.append(self._guarded(func, item))
            return results

        futures: list[Future] = [executor.submit(self._guarded, func, item) for item in items]
        results = []
        try:
            for future in futures:
                results.append(future.result())
        except BaseException:
            self.cancel()
            for future in futures:
                future.cancel()
            LOGGER.warning("扫描中止：%d 个任务中有任务失败", len(futures))
            raise
        return results
