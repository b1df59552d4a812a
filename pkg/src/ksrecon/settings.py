import os
from pathlib import Path
from typing import Any, Mapping

from dotenv import dotenv_values, load_dotenv

from ksrecon.errors import ConfigurationError

load_dotenv()

THREADS_ENV = "KSRECON_THREADS"


def thread_count() -> int:
    """Worker cap from KSRECON_THREADS; 0 or unset means one worker per CPU"""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got '{raw}'") from e
    if requested < 0:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 0, got {requested}")
    return requested or (os.cpu_count() or 1)


def read_flat_config(path: str | Path) -> dict[str, str]:
    """Parse a flat key=value file; blank values are dropped"""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    return {k: v for k, v in dotenv_values(path).items() if v is not None and v != ""}


def merge_overrides(file_values: Mapping[str, Any], flag_values: Mapping[str, Any]) -> dict[str, Any]:
    """Command-line flags win over file values; flags left at None do not override"""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged
