"""
C2ED2 - Logging
Single stderr sink; stdout is reserved for results.
The package logger is disabled at import; configure_logging turns it on.
"""

import sys

from loguru import logger

from .errors import ConfigError

_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}"


def configure_logging(level: str = "INFO"):
    """Install the stderr sink at the given level and enable package logs"""
    logger.remove()
    try:
        logger.add(sys.stderr, level=level.upper(), format=_FORMAT)
    except ValueError as e:
        raise ConfigError(f"invalid log level {level!r}: {e}")
    logger.enable("c2ed2")
    return logger
