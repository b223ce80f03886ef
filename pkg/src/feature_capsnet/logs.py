"""
Logging setup shared by the library and the command line
"""

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from .settings import get_log_level

# Shared console for tables and log records
console = Console(stderr=False)

_ROOT = "feature_capsnet"
_configured = False


def get_logger(name: str) -> logging.Logger:
    """Get a logger under the package namespace"""
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)


def configure_logging(level: Optional[str] = None) -> None:
    """Install the rich handler on the package logger (idempotent)"""
    global _configured

    logger = logging.getLogger(_ROOT)
    logger.setLevel((level or get_log_level()).upper())
    if _configured:
        return

    handler = RichHandler(console=Console(stderr=True), show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.propagate = False
    _configured = True

# Error lines go to stderr so stdout stays parseable
err_console = Console(stderr=True)
