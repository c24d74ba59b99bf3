"""Repository for check reports and scan rows attached to ledger runs."""

import json
import logging
import math
from typing import Optional

from sqlalchemy import select

from aseplab.database import get_session
from aseplab.db_models import CheckReportDB, ScanRowDB
from aseplab.models import CheckReport, CheckStatus, ConvergenceRow

logger = logging.getLogger(__name__)


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def _db_to_report(row: CheckReportDB) -> CheckReport:
    status = CheckStatus(row.status)
    residual = row.residual
    if residual is None:
        # non-finite residuals are stored as NULL
        residual = math.nan if status == CheckStatus.SKIPPED else math.inf
    return CheckReport(
        name=row.name,
        point=json.loads(row.point_json),
        residual=residual,
        threshold=row.threshold,
        status=status,
        reason=row.reason,
        runtime=row.runtime,
    )


async def add_reports(run_id: str, reports: list[CheckReport]) -> int:
    async with get_session() as session:
        for report in reports:
            session.add(
                CheckReportDB(
                    run_id=run_id,
                    name=report.name,
                    point_json=json.dumps(report.point, sort_keys=True),
                    residual=_finite(report.residual),
                    threshold=report.threshold,
                    status=report.status.value,
                    reason=report.reason,
                    runtime=report.runtime,
                )
            )
        await session.commit()
    logger.debug(f"Stored {len(reports)} reports for run {run_id}")
    return len(reports)


async def get_reports(run_id: str, status: Optional[CheckStatus] = None) -> list[CheckReport]:
    """Reports of a run in name order."""
    async with get_session() as session:
        query = select(CheckReportDB).where(CheckReportDB.run_id == run_id)
        if status is not None:
            query = query.where(CheckReportDB.status == status.value)
        result = await session.execute(query.order_by(CheckReportDB.name, CheckReportDB.id))
        return [_db_to_report(row) for row in result.scalars()]


async def add_scan_rows(run_id: str, rows: list[ConvergenceRow]) -> int:
    async with get_session() as session:
        for row in rows:
            session.add(
                ScanRowDB(
                    run_id=run_id,
                    n=row.n,
                    m=row.m,
                    tv=row.tv,
                    theta_pow=row.theta_pow,
                    fitted_bound=_finite(row.fitted_bound),
                )
            )
        await session.commit()
    return len(rows)


async def get_scan_rows(run_id: str) -> list[ConvergenceRow]:
    async with get_session() as session:
        result = await session.execute(select(ScanRowDB).where(ScanRowDB.run_id == run_id).order_by(ScanRowDB.n))
        return [
            ConvergenceRow(n=row.n, m=row.m, tv=row.tv, theta_pow=row.theta_pow, fitted_bound=row.fitted_bound or 0.0)
            for row in result.scalars()
        ]
