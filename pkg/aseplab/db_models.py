"""SQLAlchemy ORM models for the run ledger."""

from sqlalchemy import Column, Float, ForeignKey, Index, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase


class Base(DeclarativeBase):
    """Base class for all ORM models."""
    pass


class RunDB(Base):
    """One CLI invocation that wrote to the ledger."""
    __tablename__ = "runs"

    id = Column(String, primary_key=True)
    command = Column(String, nullable=False)
    status = Column(String, nullable=False, default="running")
    config_json = Column(Text, nullable=True)
    error = Column(Text, nullable=True)
    created_at = Column(String, nullable=True)  # ISO format timestamp
    completed_at = Column(String, nullable=True)  # ISO format timestamp

    __table_args__ = (
        Index("idx_runs_command_created", "command", "created_at"),
    )


class CheckReportDB(Base):
    """Verification report of one check at one grid point."""
    __tablename__ = "check_reports"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String, ForeignKey("runs.id", ondelete="CASCADE"), nullable=False)
    name = Column(String, nullable=False)
    point_json = Column(Text, nullable=False)
    residual = Column(Float, nullable=True)  # NULL for non-finite residuals
    threshold = Column(Float, nullable=False)
    status = Column(String, nullable=False)
    reason = Column(Text, nullable=True)
    runtime = Column(Float, nullable=True)

    __table_args__ = (
        Index("idx_check_reports_run", "run_id", "name"),
    )


class ScanRowDB(Base):
    """One row of a convergence scan."""
    __tablename__ = "scan_rows"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String, ForeignKey("runs.id", ondelete="CASCADE"), nullable=False)
    n = Column(Integer, nullable=False)
    m = Column(Integer, nullable=False)
    tv = Column(Float, nullable=False)
    theta_pow = Column(Float, nullable=False)
    fitted_bound = Column(Float, nullable=True)

    __table_args__ = (
        Index("idx_scan_rows_run", "run_id", "n"),
    )
