"""
Logging setup shared by the CLI and the scripts
"""

import logging
from typing import Optional

from src.utils.config import Config

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(level: Optional[str] = None) -> logging.Logger:
    """
    Configure the root logger with a single stream handler

    Args:
        level: Level name (defaults to Config.LOG_LEVEL)

    Returns:
        The package logger
    """
    level_name = (level or Config.LOG_LEVEL).upper()
    numeric = getattr(logging, level_name, None)
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: {level_name}")

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%H:%M:%S"))
    root.addHandler(handler)
    root.setLevel(numeric)

    return logging.getLogger("src")


def progress_enabled() -> bool:
    """tqdm bars are shown only when INFO messages are"""
    return logging.getLogger("src").getEffectiveLevel() <= logging.INFO
