"""
Common CLI utilities for the iclbo command-line tools.

Provides shared functionality for argument parsing, logging setup, and error handling.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional

# Add project root to Python path for direct script execution
_project_root = Path(__file__).parent.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from src.config import Config, config  # noqa: E402
from src.exceptions import (  # noqa: E402
    ConfigurationError,
    IclboError,
    MissingFileError,
    ProtocolError,
    TransportError,
    ValidationError,
)
from src.logging_config import disable_console_logging, setup_logging  # noqa: E402

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_TRANSPORT = 3
EXIT_INTERRUPTED = 130


def setup_cli_logging(
    log_file: Optional[Path], verbose: bool = False, quiet: bool = False
) -> logging.Logger:
    """
    Set up logging for CLI applications with consistent configuration.

    Args:
        log_file: Path to log file (or None to use config default)
        verbose: Enable DEBUG level logging
        quiet: Suppress console output (only log to file)

    Returns:
        Configured logger instance
    """
    log_level = logging.DEBUG if verbose else logging.INFO
    logger = setup_logging(log_file or config.log_file, level=log_level)

    if quiet:
        disable_console_logging(logger)

    return logger


def add_common_arguments(
    parser: argparse.ArgumentParser,
    include_log: bool = True,
    include_verbose: bool = True,
    include_quiet: bool = True,
) -> None:
    """
    Add common CLI arguments to an argument parser.

    Args:
        parser: ArgumentParser instance to add arguments to
        include_log: Include --log argument
        include_verbose: Include --verbose argument
        include_quiet: Include --quiet argument
    """
    if include_log:
        parser.add_argument(
            "--log", type=Path, default=None, help=f"Log file path (default: {config.log_file})"
        )

    if include_verbose:
        parser.add_argument(
            "-v", "--verbose", action="store_true", help="Enable verbose logging (DEBUG level)"
        )

    if include_quiet:
        parser.add_argument(
            "-q", "--quiet", action="store_true", help="Suppress console output (only log to file)"
        )


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """--config, --backend and --out, shared by commands that talk to a backend."""
    parser.add_argument(
        "--config", type=Path, default=None, help="JSON operator config (default: built-in)"
    )
    parser.add_argument(
        "--backend",
        choices=("mock", "http"),
        default=None,
        help=f"LLM backend, overrides the config file (default: {config.backend})",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help=f"Output directory for run logs (default: {config.output_dir})",
    )


def load_config(args: argparse.Namespace) -> Config:
    """
    Operator config from --config plus command-line overrides, validated.

    Raises:
        MissingFileError, ValidationError: If the config file is unusable
        ConfigurationError: If the http backend lacks its endpoint or credential
    """
    cfg = Config.from_file(args.config) if getattr(args, "config", None) else Config()
    if getattr(args, "backend", None):
        cfg.backend = args.backend
    if getattr(args, "out", None):
        cfg.output_dir = Path(args.out)
    cfg.validate()
    return cfg


def handle_cli_execution(func: Callable[[], int], logger: logging.Logger) -> int:
    """
    Execute a CLI function with consistent error handling.

    Exit codes: 2 for invalid input or configuration, 3 for LLM transport or
    protocol failures, 1 for any other failure, 130 on interrupt.

    Args:
        func: Function to execute (should return exit code)
        logger: Logger instance for error reporting

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    try:
        return func()

    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return EXIT_INTERRUPTED

    except (ValidationError, ConfigurationError, MissingFileError) as e:
        logger.error(f"Invalid input: {str(e)}")
        return EXIT_INVALID

    except (TransportError, ProtocolError) as e:
        logger.error(f"LLM request failed: {str(e)}")
        return EXIT_TRANSPORT

    except IclboError as e:
        logger.error(f"Error: {str(e)}")
        return EXIT_FAILURE

    except Exception as e:
        logger.error(f"Fatal error: {str(e)}", exc_info=True)
        return EXIT_FAILURE
