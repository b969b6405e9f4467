"""
Logger configuration for solarsched.
Provides structured logging for runs, fits and schedules.
"""

import logging
import os
import sys
from typing import Optional

from dotenv import load_dotenv

LOG_LEVEL_ENV = "SOLARSCHED_LOG_LEVEL"


def setup_logger(name: str = "solarsched", level: Optional[str] = None) -> logging.Logger:
    """
    Set up the package logger.

    Args:
        name: Logger name
        level: Log level (DEBUG, INFO, WARNING, ERROR). Falls back to the
            SOLARSCHED_LOG_LEVEL environment variable (a .env file is honoured), then INFO.

    Returns:
        Configured logger instance
    """

    if level is None:
        load_dotenv()
        level = os.getenv(LOG_LEVEL_ENV, "INFO")

    logger = logging.getLogger(name)
    log_level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(log_level)

    # Avoid duplicate handlers
    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(log_level)
        return logger

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(log_level)

    formatter = logging.Formatter(
        fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    handler.setFormatter(formatter)
    logger.addHandler(handler)

    return logger


logger = logging.getLogger("solarsched")


def log_command(command: str, params: dict):
    """Log an incoming CLI command"""
    logger.info(f"Command {command}: {params}")


def log_stage(stage: str, detail: str, success: bool = True):
    """Log a pipeline stage"""
    status = "SUCCESS" if success else "FAILED"
    logger.info(f"Stage {stage} - {status}: {detail}")


def log_validation_error(error_type: str, details: str):
    """Log validation errors"""
    logger.warning(f"Validation error ({error_type}): {details}")


def log_error(error: Exception, context: str = ""):
    """Log errors with context"""
    logger.error(f"Error in {context}: {type(error).__name__}: {str(error)}")


def log_performance(operation: str, duration_ms: float):
    """Log performance metrics"""
    logger.info(f"Performance - {operation}: {duration_ms:.2f}ms")


def log_gap_fill(window_index: int):
    """Log a zero-filled resampling window"""
    logger.warning(f"Gap fill - sub-hour window {window_index} has no samples, energy set to 0")
