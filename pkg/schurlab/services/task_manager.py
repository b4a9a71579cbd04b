"""
Task Manager Service for SchurLab
Runs independent numerical tasks on a bounded worker pool and tracks them
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from schurlab.core.config import settings, thread_cap
from schurlab.core.logging import LoggerManager

logger = logging.getLogger(__name__)


def task_rng(seed: int, task_id: int) -> np.random.Generator:
    """Independent stream for task `task_id` of an experiment seeded with `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(task_id)])))


class TaskManager:
    """
    Executes batches of independent tasks and keeps per-task bookkeeping.

    Results are always returned in task-id order, whatever order the
    workers finish in.
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = thread_cap(threads)
        self.active_tasks: Dict[str, Dict[str, Any]] = {}
        self.completed = 0
        self.failed = 0
        self._lock = threading.Lock()

    def run_tasks(
        self,
        task_name: str,
        func: Callable[..., Any],
        payloads: Sequence[Any],
        seed: Optional[int] = None,
    ) -> List[Any]:
        """
        Run func(payload, rng) for every payload.

        Task i receives task_rng(seed, i); a failing task re-raises after
        the batch has been drained.
        """
        seed = settings.default_seed if seed is None else seed
        started = time.perf_counter()

        def run_one(task_id: int, payload: Any):
            key = f"{task_name}:{task_id}"
            with self._lock:
                self.active_tasks[key] = {"task_name": task_name, "task_id": task_id,
                                          "status": "RUNNING", "started": time.perf_counter()}
            t0 = time.perf_counter()
            try:
                result = func(payload, task_rng(seed, task_id))
            except Exception as e:
                self._finish(key, "FAILURE", time.perf_counter() - t0)
                LoggerManager.log_task_execution(task_name, task_id, "FAILURE",
                                                 time.perf_counter() - t0, error=str(e))
                raise
            self._finish(key, "SUCCESS", time.perf_counter() - t0)
            LoggerManager.log_task_execution(task_name, task_id, "SUCCESS", time.perf_counter() - t0)
            return result

        if self.threads == 1 or len(payloads) <= 1:
            results, first = [], None
            for i, p in enumerate(payloads):
                try:
                    results.append(run_one(i, p))
                except Exception as e:
                    first = first or e
            if first is not None:
                raise first
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                futures = [pool.submit(run_one, i, p) for i, p in enumerate(payloads)]
                errors = [f.exception() for f in futures]
                first = next((e for e in errors if e is not None), None)
                if first is not None:
                    raise first
                results = [f.result() for f in futures]

        LoggerManager.log_performance_metric(f"{task_name}_batch", time.perf_counter() - started)
        return results

    def _finish(self, key: str, status: str, duration: float):
        with self._lock:
            self.active_tasks.get(key, {}).update({"status": status, "duration": duration})
            if status == "SUCCESS":
                self.completed += 1
            else:
                self.failed += 1

    def get_task_status(self, task_name: str, task_id: int) -> Dict[str, Any]:
        entry = self.active_tasks.get(f"{task_name}:{task_id}")
        if entry is None:
            return {"task_name": task_name, "task_id": task_id, "status": "UNKNOWN"}
        return dict(entry)

    def get_active_tasks(self) -> List[Dict[str, Any]]:
        return [dict(v) for v in self.active_tasks.values() if v["status"] == "RUNNING"]

    def get_statistics(self) -> Dict[str, Any]:
        return {
            "threads": self.threads,
            "completed": self.completed,
            "failed": self.failed,
            "tracked": len(self.active_tasks),
        }
