"""
Centralized logging configuration for iclbo.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional

ROOT_LOGGER = "iclbo"


def setup_logging(
    log_file: Optional[Path],
    level: int = logging.INFO,
    console: bool = True,
    file_mode: str = "a",
) -> logging.Logger:
    """
    Set up logging with a file handler and an optional console handler.

    Args:
        log_file: Path to the log file (None disables file logging)
        level: Logging level (default: INFO)
        console: Whether to include console output (default: True)
        file_mode: File mode for log file ('a' for append, 'w' for overwrite)

    Returns:
        Configured root engine logger

    Raises:
        OSError: If the log file cannot be opened and console output is off
    """
    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(level)

    # Clear existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    if log_file is not None:
        try:
            if log_file.parent and not log_file.parent.exists():
                log_file.parent.mkdir(parents=True, exist_ok=True)

            file_handler = logging.FileHandler(log_file, encoding="utf-8", mode=file_mode)
            file_handler.setLevel(level)
            file_handler.setFormatter(
                logging.Formatter(
                    "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                    datefmt="%Y-%m-%d %H:%M:%S",
                )
            )
            logger.addHandler(file_handler)
        except OSError as e:
            sys.stderr.write(f"Warning: Cannot set up file logging: {e}\n")
            if not console:
                raise

    if console:
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(level)
        console_handler.setFormatter(logging.Formatter("%(levelname)s - %(message)s"))
        logger.addHandler(console_handler)

    return logger


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """
    Get a logger under the engine namespace.

    Args:
        name: Logger name; bare module names are prefixed with "iclbo."

    Returns:
        Logger instance
    """
    if name != ROOT_LOGGER and not name.startswith(ROOT_LOGGER + "."):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)


def disable_console_logging(logger: Optional[logging.Logger] = None) -> None:
    """
    Remove console handlers from logger.

    Args:
        logger: Logger instance (default: root engine logger)
    """
    if logger is None:
        logger = logging.getLogger(ROOT_LOGGER)

    for handler in logger.handlers[:]:
        # FileHandler subclasses StreamHandler; keep it
        if isinstance(handler, logging.StreamHandler) and not isinstance(
            handler, logging.FileHandler
        ):
            logger.removeHandler(handler)
