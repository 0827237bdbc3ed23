"""Tiny order-preserving worker-pool helper for Monte Carlo sweeps.

Tasks must be picklable and the mapped function a module-level callable.
Results come back in task order, so reductions are trivially independent of
the worker count (all sweep statistics are integer counts anyway).
"""

from __future__ import annotations

import multiprocessing as mp


def map_tasks(fn, tasks, workers: int = 1) -> list:
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with mp.get_context().Pool(processes=min(workers, len(tasks))) as pool:
        return pool.map(fn, tasks)
