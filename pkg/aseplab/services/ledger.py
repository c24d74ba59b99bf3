"""Blocking front end to the async run ledger, for the CLI."""

import asyncio
import logging
from typing import Optional

from aseplab.database import close_db, init_db
from aseplab.models import CheckReport, ConvergenceRow, LedgerRun, RunStatus
from aseplab.repositories import report_repository, run_repository

logger = logging.getLogger(__name__)


async def record_run(
    path: Optional[str],
    command: str,
    config: dict,
    reports: Optional[list[CheckReport]] = None,
    rows: Optional[list[ConvergenceRow]] = None,
    error: Optional[str] = None,
) -> LedgerRun:
    await init_db(path)
    try:
        await run_repository.mark_interrupted_runs_failed()
        run = await run_repository.create_run(command, config)
        if reports:
            await report_repository.add_reports(run.id, reports)
        if rows:
            await report_repository.add_scan_rows(run.id, rows)
        status = RunStatus.FAILED if error else RunStatus.COMPLETED
        await run_repository.finish_run(run.id, status, error)
        logger.info(f"Recorded {command} run {run.id} in the ledger")
        return await run_repository.get_run(run.id)
    finally:
        await close_db()


async def load_history(path: Optional[str], run_id: Optional[str] = None, limit: int = 20) -> dict:
    """Recent runs, or one run with its reports and scan rows."""
    await init_db(path)
    try:
        if run_id is None:
            return {"runs": await run_repository.list_runs(limit=limit)}
        run = await run_repository.get_run(run_id)
        if run is None:
            return {"run": None}
        return {
            "run": run,
            "reports": await report_repository.get_reports(run_id),
            "rows": await report_repository.get_scan_rows(run_id),
        }
    finally:
        await close_db()


def store(path: Optional[str], command: str, config: dict, **results) -> LedgerRun:
    return asyncio.run(record_run(path, command, config, **results))


def history(path: Optional[str], run_id: Optional[str] = None, limit: int = 20) -> dict:
    return asyncio.run(load_history(path, run_id, limit))
