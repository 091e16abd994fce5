import os
import logging
from typing import Any, Callable, Sequence, TypeVar

from multiprocess import Pool, cpu_count  # type: ignore[import-untyped]
from tqdm import tqdm

LOG = logging.getLogger(__name__)

THREADS_ENV = "SRSENSE_THREADS"

T = TypeVar("T")


def worker_count(requested: int | None = None) -> int:
    """
    Number of worker processes to use.
    An explicit request wins, then SRSENSE_THREADS; 0 or unset means one
    worker per CPU.
    """
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        try:
            requested = int(raw) if raw else 0
        except ValueError:
            LOG.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
            requested = 0
    if requested < 0:
        raise ValueError(f"worker count must be >= 0: {requested}")
    return requested or cpu_count()


def run_indexed(
    func: Callable[[Any], T],
    tasks: Sequence[Any],
    workers: int = 1,
    progress: bool = False,
    desc: str | None = None,
) -> list[T]:
    """
    Map func over tasks, returning results in task order.
    Tasks carry their own seed paths, so the result list does not depend on
    the number of workers.
    """
    total = len(tasks)
    if workers <= 1 or total <= 1:
        bar = tqdm(tasks, total=total, desc=desc, disable=not progress)
        return [func(task) for task in bar]
    with Pool(min(workers, total)) as pool:
        return list(
            tqdm(
                pool.imap(func, tasks),
                total=total,
                desc=desc,
                disable=not progress,
            )
        )
