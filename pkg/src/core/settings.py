"""Process settings read from the environment (.env supported)"""

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

DEFAULT_ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class Settings:
    """Environment-level knobs shared by the library and the CLI"""
    workers: int
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        return default
    return value if value > 0 else default


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Read settings once per process.

    Environment variables:
        RBM_WORKERS: replica worker count (default: available CPUs)
        RBM_LOG_LEVEL: console log level (default INFO)
        RBM_LOG_DIR: directory for daily log files (file logging off when unset)
        RBM_ENUMERATION_CAP: maximum joint partitions the oracle enumerates
    """
    return Settings(
        workers=_int_from_env("RBM_WORKERS", os.cpu_count() or 1),
        log_level=(os.getenv("RBM_LOG_LEVEL") or "INFO").upper(),
        log_dir=os.getenv("RBM_LOG_DIR") or None,
        enumeration_cap=_int_from_env("RBM_ENUMERATION_CAP", DEFAULT_ENUMERATION_CAP),
    )


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: explicit request first, then RBM_WORKERS, then CPU count"""
    if requested is not None and requested > 0:
        return requested
    return get_settings().workers
