"""
Environment defaults for feature-capsnet

Values come from the process environment or a `.env` file. Command-line
flags override everything read here.
"""

import os
from typing import Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

DEFAULT_SEED = 0
DEFAULT_OUT_DIR = "runs"
DEFAULT_LOG_LEVEL = "INFO"
# 11 GiB, a GTX 1080 Ti
DEFAULT_BUDGET_BYTES = 11 * 1024**3


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        # logs imports this module for its level
        from .logs import get_logger

        get_logger(__name__).warning(f"Ignoring non-integer {name}={raw!r}; using {default}")
        return default


def get_default_seed() -> int:
    """Get the default seed from CAPSNET_SEED or fallback"""
    return _env_int("CAPSNET_SEED", DEFAULT_SEED)


def get_default_out_dir() -> str:
    """Get the default output directory from CAPSNET_OUT_DIR or fallback"""
    return os.environ.get("CAPSNET_OUT_DIR", DEFAULT_OUT_DIR)


def get_log_level() -> str:
    """Get the log level from CAPSNET_LOG_LEVEL or fallback"""
    return os.environ.get("CAPSNET_LOG_LEVEL", DEFAULT_LOG_LEVEL)


def get_default_budget() -> int:
    """Get the memory budget in bytes from CAPSNET_BUDGET_BYTES or fallback"""
    return _env_int("CAPSNET_BUDGET_BYTES", DEFAULT_BUDGET_BYTES)


def get_default_workers() -> int:
    """Get the number of sweep worker processes from CAPSNET_WORKERS or fallback"""
    return max(1, _env_int("CAPSNET_WORKERS", 1))


def get_mnist_dir() -> Optional[str]:
    """Get the directory holding MNIST-format IDX files, if configured"""
    return os.environ.get("CAPSNET_MNIST_DIR")
