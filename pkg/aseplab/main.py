import logging
import sys

from aseplab import __version__

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """Log to stderr; stdout carries machine-readable output only."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


def main() -> int:
    from aseplab.cli import run

    configure_logging()
    logging.getLogger(__name__).debug(f"aseplab v{__version__}")
    return run(sys.argv[1:])
