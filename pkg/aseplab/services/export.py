"""JSON and CSV documents for measures, reports and scans.

Floats are written with a fixed number of significant digits and non-finite
values become null, so identical runs emit identical bytes.
"""

import csv
import io
import json
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np
from pydantic import BaseModel

from aseplab.models import BinaryMeasure, BoundaryParams, CheckReport, CheckStatus, OpenAsepRates, ScanResult
from aseplab.settings_defaults import DEFAULT_RUN_CONFIG

DIGITS = DEFAULT_RUN_CONFIG["digits"]


def format_float(value: float, digits: int = DIGITS) -> Optional[float]:
    if not math.isfinite(value):
        return None
    return float(f"{value:.{digits}g}")


def clean(value: Any, digits: int = DIGITS) -> Any:
    """Plain JSON-ready structure with rounded floats."""
    if isinstance(value, BaseModel):
        return clean(value.model_dump(mode="python"), digits)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format_float(float(value), digits)
    if isinstance(value, np.ndarray):
        return [clean(item, digits) for item in value.tolist()]
    if isinstance(value, dict):
        return {str(key): clean(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(item, digits) for item in value]
    return value


def to_json(document: Any, digits: int = DIGITS, indent: Optional[int] = 2) -> str:
    return json.dumps(clean(document, digits), indent=indent, allow_nan=False)


def parameter_header(params: BoundaryParams, rates: OpenAsepRates) -> dict:
    """Both parameterizations of a point."""
    return {"rates": rates.model_dump(), "params": params.model_dump()}


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def measure_document(measure: BinaryMeasure, **header) -> dict:
    return {
        **header,
        "m": measure.m,
        "kind": measure.kind.value,
        "weights": {measure.word(index): float(weight) for index, weight in enumerate(measure.weights)},
    }


def table_csv(header: list[str], rows: Iterable[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if item is None else item for item in row])
    return buffer.getvalue()


def measure_csv(measure: BinaryMeasure, digits: int = DIGITS) -> str:
    return table_csv(
        ["word", "weight"],
        ([measure.word(index), format_float(float(weight), digits)] for index, weight in enumerate(measure.weights)),
    )


# ---------------------------------------------------------------------------
# Check reports
# ---------------------------------------------------------------------------


def report_document(report: CheckReport, timings: bool = False) -> dict:
    document = report.model_dump(mode="python")
    if not timings:
        document.pop("runtime")
    return document


def reports_jsonl(reports: list[CheckReport], digits: int = DIGITS, timings: bool = False) -> str:
    return "".join(to_json(report_document(report, timings), digits, indent=None) + "\n" for report in reports)


def reports_csv(reports: list[CheckReport], digits: int = DIGITS, timings: bool = False) -> str:
    header = ["name", "status", "residual", "threshold", "point", "reason"] + (["runtime"] if timings else [])
    rows = []
    for report in reports:
        row = [
            report.name,
            report.status.value,
            format_float(report.residual, digits),
            format_float(report.threshold, digits),
            json.dumps(clean(report.point, digits), sort_keys=True),
            report.reason,
        ]
        if timings:
            row.append(format_float(report.runtime or 0.0, 4))
        rows.append(row)
    return table_csv(header, rows)


def report_table(reports: list[CheckReport]) -> str:
    """Aligned name / status / residual / threshold table with a summary line."""
    lines = [f"{'check':<22} {'status':<8} {'residual':>12} {'threshold':>12}  reason"]
    for report in reports:
        lines.append(
            f"{report.name:<22} {report.status.value:<8} {report.residual:>12.3e} {report.threshold:>12.3e}  "
            f"{report.reason or ''}".rstrip()
        )
    counts = {status: sum(report.status == status for report in reports) for status in CheckStatus}
    lines.append(
        f"{len(reports)} reports: {counts[CheckStatus.PASS]} passed, "
        f"{counts[CheckStatus.FAIL]} failed, {counts[CheckStatus.SKIPPED]} skipped"
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Convergence scans
# ---------------------------------------------------------------------------


def scan_csv(result: ScanResult, digits: int = DIGITS) -> str:
    return table_csv(
        ["n", "m", "tv", "theta_pow", "fitted_bound"],
        (
            [row.n, row.m, format_float(row.tv, digits), format_float(row.theta_pow, digits),
             format_float(row.fitted_bound, digits)]
            for row in result.rows
        ),
    )


def scan_sidecar(result: ScanResult) -> dict:
    """Everything in a scan except its rows."""
    return result.model_dump(mode="python", exclude={"rows"})


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def write_output(text: str, path: Optional[str] = None) -> Optional[Path]:
    """Write to `path`, or to stdout when no path is given."""
    if not path:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
    return target


def sidecar_path(path: str) -> Path:
    target = Path(path)
    return target.with_name(target.stem + ".meta.json")
