import sys
from typing import Optional

from loguru import logger

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan> - {extra[prefix]}<level>{message}</level>"
)

logger.configure(extra={"prefix": ""})


def setup_logging(level: str = "INFO") -> None:
    """Replaces every sink with a single stderr sink at `level`."""

    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)


def worker_logger(index: int, label: Optional[str] = None):
    """Logger whose messages are prefixed with the sweep grid point they belong to.

    :param index: Position of the grid point in the sweep.
    :param label: Optional value of the swept variable, e.g. ``"L=100"``.
    """

    prefix = f"[{index}{'|' + label if label else ''}] "
    return logger.bind(worker=index, prefix=prefix)
