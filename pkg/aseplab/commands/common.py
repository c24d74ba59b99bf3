"""Pieces shared by the subcommands: parameter points, output and the ledger."""

import argparse
import logging
from typing import Any, Optional

from aseplab.config import settings
from aseplab.models import RunConfig, Which
from aseplab.services import export, ledger

logger = logging.getLogger(__name__)

RATE_KEYS = ("alpha", "beta", "gamma", "delta")
PARAM_KEYS = ("A", "B", "C", "D")


class UsageError(Exception):
    """A flag or config value is missing or malformed."""


def float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def add_which(parser: argparse.ArgumentParser, default: Which = Which.FIRST) -> None:
    parser.add_argument("--which", choices=[w.value for w in Which], default=default.value)


def add_backend(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["nested", "projection"], default=None,
                        help="multi-time integration backend (default: settings)")


def require(options: dict, key: str, flag: str) -> Any:
    value = options.get(key)
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


def run_config(command: str, options: dict, **extra) -> RunConfig:
    """RunConfig for the parameter point in the options; exactly one parameterization."""
    rates = {key: options[key] for key in RATE_KEYS if options.get(key) is not None}
    params = {key: options[key] for key in PARAM_KEYS if options.get(key) is not None}
    if rates and params:
        raise UsageError("give either --alpha/--beta/--gamma/--delta or --A/--B/--C/--D, not both")
    if not rates and not params:
        raise UsageError("a parameter point is required: --alpha --beta [--gamma --delta] or --A --C [--B --D]")
    q = options.get("q") or 0.0
    return RunConfig(
        command=command,
        rates={**rates, "q": q} if rates else None,
        params={**params, "q": q} if params else None,
        precision_bits=settings.precision_bits,
        seed=options["seed"],
        output=options.get("output"),
        format=options["format"],
        **extra,
    )


def header(config: RunConfig) -> dict:
    """Command name and both parameterizations of the point."""
    return {"command": config.command, **export.parameter_header(config.params, config.rates)}


def emit(options: dict, document: Any, csv_text: Optional[str] = None) -> None:
    """JSON document, or the CSV table when --format csv and one exists."""
    digits = options["digits"]
    if options["format"] == "csv" and csv_text is not None:
        export.write_output(csv_text, options.get("output"))
    else:
        export.write_output(export.to_json(document, digits) + "\n", options.get("output"))


def record(options: dict, command: str, config: dict, **results) -> None:
    """Store the run when a ledger is configured."""
    if not settings.database_path:
        return
    run = ledger.store(settings.database_path, command, export.clean(config), **results)
    logger.info(f"Ledger run id: {run.id}")
