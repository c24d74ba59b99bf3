"""Repository for ledger runs."""

import json
import logging
import uuid
from datetime import datetime, timezone
from typing import Optional

from sqlalchemy import delete, select, update

from aseplab.database import get_session
from aseplab.db_models import CheckReportDB, RunDB, ScanRowDB
from aseplab.models import LedgerRun, RunStatus

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _db_to_run(row: RunDB) -> LedgerRun:
    """Convert DB row to Pydantic model."""
    try:
        config = json.loads(row.config_json) if row.config_json else {}
    except json.JSONDecodeError:
        logger.warning(f"Invalid config JSON for run {row.id}")
        config = {}
    return LedgerRun(
        id=row.id,
        command=row.command,
        status=RunStatus(row.status),
        config=config,
        created_at=row.created_at,
        completed_at=row.completed_at,
        error=row.error,
    )


async def create_run(command: str, config: dict) -> LedgerRun:
    """Insert a running entry and return it."""
    run = LedgerRun(id=uuid.uuid4().hex[:12], command=command, config=config, created_at=_now())
    async with get_session() as session:
        session.add(
            RunDB(
                id=run.id,
                command=run.command,
                status=run.status.value,
                config_json=json.dumps(config, sort_keys=True, default=str),
                created_at=run.created_at,
            )
        )
        await session.commit()
    logger.debug(f"Created run {run.id} ({command})")
    return run


async def finish_run(run_id: str, status: RunStatus, error: Optional[str] = None) -> None:
    async with get_session() as session:
        values = {"status": status.value, "completed_at": _now()}
        if error is not None:
            values["error"] = error
        await session.execute(update(RunDB).where(RunDB.id == run_id).values(**values))
        await session.commit()
    logger.debug(f"Run {run_id} finished: {status.value}")


async def get_run(run_id: str) -> Optional[LedgerRun]:
    async with get_session() as session:
        row = await session.scalar(select(RunDB).where(RunDB.id == run_id))
        return _db_to_run(row) if row else None


async def list_runs(command: Optional[str] = None, limit: int = 20) -> list[LedgerRun]:
    """Most recent runs first."""
    async with get_session() as session:
        query = select(RunDB)
        if command:
            query = query.where(RunDB.command == command)
        result = await session.execute(query.order_by(RunDB.created_at.desc()).limit(limit))
        return [_db_to_run(row) for row in result.scalars()]


async def mark_interrupted_runs_failed() -> int:
    """Mark runs left 'running' by a killed process as failed."""
    async with get_session() as session:
        result = await session.execute(
            update(RunDB)
            .where(RunDB.status == RunStatus.RUNNING.value)
            .values(status=RunStatus.FAILED.value, error="Interrupted", completed_at=_now())
        )
        await session.commit()
        count = result.rowcount
        if count > 0:
            logger.info(f"Marked {count} interrupted runs as failed")
        return count


async def delete_run(run_id: str) -> bool:
    async with get_session() as session:
        await session.execute(delete(CheckReportDB).where(CheckReportDB.run_id == run_id))
        await session.execute(delete(ScanRowDB).where(ScanRowDB.run_id == run_id))
        result = await session.execute(delete(RunDB).where(RunDB.id == run_id))
        await session.commit()
        return result.rowcount > 0
