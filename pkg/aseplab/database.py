"""Async SQLite ledger connection and initialization."""

import logging
from contextlib import asynccontextmanager
from pathlib import Path
from typing import AsyncGenerator, Optional

from sqlalchemy import text
from sqlalchemy.ext.asyncio import AsyncSession, async_sessionmaker, create_async_engine

from aseplab.config import settings
from aseplab.db_models import Base

logger = logging.getLogger(__name__)

# Global engine and session factory
_engine = None
_session_factory = None


def _get_database_path(path: Optional[str] = None) -> Path:
    """Explicit path first, then ASEPLAB_DATABASE_PATH, then ./aseplab.db."""
    if path:
        database_path = Path(path)
        database_path.parent.mkdir(parents=True, exist_ok=True)
        return database_path
    return settings.database_file or Path("./aseplab.db")


async def init_db(path: Optional[str] = None):
    """Initialize the ledger: create tables and set pragmas."""
    global _engine, _session_factory

    database_path = _get_database_path(path)
    logger.info(f"Initializing ledger at: {database_path}")

    _engine = create_async_engine(
        f"sqlite+aiosqlite:///{database_path}",
        echo=False,
    )

    async with _engine.begin() as conn:
        await conn.execute(text("PRAGMA journal_mode=WAL"))
        await conn.execute(text("PRAGMA synchronous=NORMAL"))
        await conn.execute(text("PRAGMA foreign_keys=ON"))
        await conn.execute(text("PRAGMA busy_timeout=5000"))

        await conn.run_sync(Base.metadata.create_all)

    _session_factory = async_sessionmaker(
        _engine,
        class_=AsyncSession,
        expire_on_commit=False,
    )
    logger.debug("Ledger initialized")


@asynccontextmanager
async def get_session() -> AsyncGenerator[AsyncSession, None]:
    """Get an async database session."""
    if _session_factory is None:
        raise RuntimeError("Ledger not initialized. Call init_db() first.")

    async with _session_factory() as session:
        try:
            yield session
        except Exception:
            await session.rollback()
            raise


async def close_db():
    """Close the ledger connection."""
    global _engine, _session_factory
    if _engine:
        await _engine.dispose()
        _engine = None
        _session_factory = None
        logger.debug("Ledger connection closed")
