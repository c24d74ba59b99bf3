from enum import Enum
from typing import Optional


class ErrorCode(str, Enum):
    """Failure kinds raised by the lab's numerical services."""
    NONCONVERGENT = "NONCONVERGENT"
    RECURRENCE_SINGULAR = "RECURRENCE_SINGULAR"
    DIVISION_BY_ZERO = "DIVISION_BY_ZERO"
    INADMISSIBLE = "INADMISSIBLE"
    MASS_CHECK_FAILED = "MASS_CHECK_FAILED"
    DOMAIN = "DOMAIN"
    QUADRATURE_NONCONVERGED = "QUADRATURE_NONCONVERGED"
    SIGN_INCONSISTENT = "SIGN_INCONSISTENT"
    X_NOT_IN_SUPPORT = "X_NOT_IN_SUPPORT"
    CAP_EXCEEDED = "CAP_EXCEEDED"
    EXPANSION_SINGULAR = "EXPANSION_SINGULAR"
    SOLVE_FAILED = "SOLVE_FAILED"
    NEGATIVE_MASS = "NEGATIVE_MASS"
    PHASE = "PHASE"
    UNKNOWN_CHECK = "UNKNOWN_CHECK"


class LabError(Exception):
    """A computation could not be carried out; `code` says why."""

    def __init__(self, code: ErrorCode, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail or {}

    def __str__(self) -> str:
        return f"{self.code.value}: {self.message}"

    def to_dict(self) -> dict:
        return {"code": self.code.value, "message": self.message, "detail": self.detail}
