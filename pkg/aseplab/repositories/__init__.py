"""Repository layer for ledger operations."""

from aseplab.repositories import report_repository
from aseplab.repositories import run_repository

__all__ = ["run_repository", "report_repository"]
