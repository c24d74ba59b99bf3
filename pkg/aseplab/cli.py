"""Command-line front end: `aseplab <command> [flags]`.

Exit status: 0 success, 1 computation error, 2 usage error, 3 failing verify suite.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from aseplab.commands import gf, history, limit, mc, phase, scan, stationary, verify
from aseplab.commands.common import UsageError
from aseplab.config import settings
from aseplab.errors import LabError
from aseplab.main import configure_logging
from aseplab.settings_defaults import CONFIG_FILE_KEYS, DEFAULT_RUN_CONFIG, SETTINGS_KEYS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_FAILED = 3

COMMANDS = (phase, stationary, gf, limit, scan, mc, verify, history)

INT_KEYS = {"n", "m", "seed", "digits", "jobs", "batches", "precision_bits"}
TEXT_KEYS = {"format", "multi_backend", "database_path", "log_level"}


def common_parser() -> argparse.ArgumentParser:
    """Flags every subcommand accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("global options")
    group.add_argument("--config", help="flat key=value file; flags override it")
    group.add_argument("--precision-bits", dest="precision_bits", type=int, default=None)
    group.add_argument("--seed", type=int, default=None)
    group.add_argument("--jobs", type=int, default=None, help="cap on concurrent worker processes")
    group.add_argument("--output", default=None, help="output file (default: stdout)")
    group.add_argument("--format", choices=["json", "csv"], default=None)
    group.add_argument("--digits", type=int, default=None, help="significant digits of emitted floats")
    group.add_argument("--db", dest="database_path", default=None, help="SQLite run ledger")
    group.add_argument("--log-level", dest="log_level", default=None,
                       choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    group.add_argument("--timings", action="store_true", default=None, help="include runtimes in reports")
    return parser


def point_parser() -> argparse.ArgumentParser:
    """Parameter point flags: rates or (A, B, C, D), and q."""
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("parameter point")
    for name in ("alpha", "beta", "gamma", "delta", "A", "B", "C", "D", "q"):
        group.add_argument(f"--{name}", type=float, default=None)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aseplab", description="Open ASEP and Askey-Wilson signed measure lab")
    sub = parser.add_subparsers(dest="command", required=True)
    common, point = common_parser(), point_parser()
    for command in COMMANDS:
        command.register(sub, common, point)
    return parser


def _parse_value(key: str, text: str):
    if key == "n_list":
        return [int(item) for item in text.split(",") if item.strip()]
    if key in TEXT_KEYS:
        return text
    if text.lower() in ("", "none"):
        return None
    if key in INT_KEYS:
        return int(text)
    return float(text)


def read_config_file(path: str) -> dict:
    """Parse `key = value` lines; `#` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, text = line.partition("=")
        key, text = key.strip(), text.strip()
        if not sep or key not in CONFIG_FILE_KEYS:
            raise UsageError(f"{path}:{number}: unknown or malformed entry {line!r}")
        try:
            values[key] = _parse_value(key, text)
        except ValueError:
            raise UsageError(f"{path}:{number}: bad value for {key}: {text!r}") from None
    return values


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults < config file < flags; settings keys are applied to `settings`."""
    options = dict(DEFAULT_RUN_CONFIG)
    file_values = read_config_file(args.config) if args.config else {}
    options.update(file_values)
    flags = {key: value for key, value in vars(args).items() if key not in ("func", "config") and value is not None}
    options.update(flags)
    options["seed_given"] = "seed" in file_values or "seed" in flags
    options["timings"] = bool(options.get("timings"))
    settings.apply({key: options[key] for key in SETTINGS_KEYS if options.get(key) is not None})
    return options


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    snapshot = settings.model_dump()
    try:
        options = resolve_options(args)
        configure_logging(settings.log_level)
        return args.func(args, options)
    except UsageError as exc:
        print(f"aseplab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"aseplab {args.command}: invalid value: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LabError as exc:
        logger.error(f"{args.command} failed: {exc}")
        print(f"aseplab {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        for name, value in snapshot.items():
            setattr(settings, name, value)
