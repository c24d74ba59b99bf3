import asyncio
import logging
import multiprocessing
from typing import Optional

from aseplab.config import settings
from aseplab.errors import ErrorCode, LabError
from aseplab.services.check_worker import execute_unit, run_check_worker

logger = logging.getLogger(__name__)


class JobManager:
    """Runs independent work units in spawned processes, at most `jobs` at a time.

    Results come back in the order of the submitted units. With one job the
    units run inline in the calling process.
    """

    def __init__(self, jobs: Optional[int] = None, poll_interval: float = 0.05):
        self._max_concurrent = max(1, jobs or settings.max_jobs)
        self._poll_interval = poll_interval
        self._mp_context = multiprocessing.get_context("spawn")
        self._processes: dict[int, multiprocessing.Process] = {}
        self._lock = asyncio.Lock()

    @property
    def max_concurrent(self) -> int:
        return self._max_concurrent

    def run(self, units: list[dict]) -> list[dict]:
        """Blocking entry point."""
        if self._max_concurrent == 1 or len(units) <= 1:
            return [self._raise_on_failure(unit, execute_unit(unit)) for unit in units]
        return asyncio.run(self.run_units(units))

    async def run_units(self, units: list[dict]) -> list[dict]:
        semaphore = asyncio.Semaphore(self._max_concurrent)
        overrides = settings.overrides()
        tasks = [
            asyncio.create_task(self._process_unit(index, {**unit, "settings": overrides}, semaphore))
            for index, unit in enumerate(units)
        ]
        try:
            results = await asyncio.gather(*tasks)
        except BaseException:
            for task in tasks:
                task.cancel()
            async with self._lock:
                processes = list(self._processes.values())
            for process in processes:
                await self._stop(process)
            raise
        return [self._raise_on_failure(unit, result) for unit, result in zip(units, results)]

    @staticmethod
    def _raise_on_failure(unit: dict, result: dict) -> dict:
        if result.get("success"):
            return result
        code = result.get("code")
        message = result.get("error") or "Work unit failed"
        if code:
            # worker messages already carry the "CODE: " prefix
            raise LabError(ErrorCode(code), message.split(": ", 1)[-1], {"unit": unit.get("kind")})
        raise RuntimeError(f"{unit.get('kind')} unit failed: {message}")

    async def _process_unit(self, index: int, payload: dict, semaphore: asyncio.Semaphore) -> dict:
        async with semaphore:
            result_queue = self._mp_context.Queue()
            process = self._mp_context.Process(
                target=run_check_worker,
                args=(payload, result_queue),
                daemon=True,
            )
            async with self._lock:
                self._processes[index] = process
            result = None
            try:
                process.start()
                # drain while alive so a large result cannot block the child's exit
                while result is None:
                    try:
                        result = result_queue.get_nowait()
                    except Exception:
                        if not self._alive(process):
                            break
                        await asyncio.sleep(self._poll_interval)
                if result is None:
                    try:
                        result = result_queue.get(timeout=1.0)
                    except Exception:
                        result = None
                await self._join(process, timeout=5.0)
                if result is None:
                    result = {"success": False, "error": f"worker exited with code {process.exitcode}"}
                logger.debug(f"Unit {index} ({payload.get('kind')}) finished: success={result.get('success')}")
                return result
            finally:
                try:
                    result_queue.close()
                    result_queue.join_thread()
                except Exception:
                    pass
                async with self._lock:
                    self._processes.pop(index, None)
                try:
                    process.close()
                except Exception:
                    pass

    @staticmethod
    def _alive(process: multiprocessing.Process) -> bool:
        # closed or never-started processes raise instead of answering
        try:
            return process.is_alive()
        except (ValueError, AssertionError):
            return False

    async def _join(self, process: multiprocessing.Process, timeout: float) -> bool:
        """Poll until the worker exits or `timeout` seconds pass; True if it exited."""
        waited = 0.0
        while self._alive(process) and waited < timeout:
            await asyncio.sleep(0.01)
            waited += 0.01
        try:
            process.join(timeout=0)
        except Exception:
            pass
        return not self._alive(process)

    async def _stop(self, process: multiprocessing.Process) -> None:
        """SIGTERM, then SIGKILL if the worker is still running two seconds later."""
        for signal_worker in (process.terminate, process.kill):
            if not self._alive(process):
                return
            signal_worker()
            if await self._join(process, timeout=2.0):
                return
        logger.warning(f"Worker {process.pid} did not exit after kill")
