import logging

from rich.console import Console
from rich.logging import RichHandler

from isps_cli.core.config import settings


def setup_logging(level: str = None) -> None:
    level = (level or settings.LOG_LEVEL).upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
