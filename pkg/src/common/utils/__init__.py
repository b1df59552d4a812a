import logging
import os

from prefect import get_run_logger
from prefect.exceptions import MissingContextError

DEFAULT_LEVEL = "INFO"


class FlowLogger:
    """Logger proxy that writes to the Prefect run logger inside flows/tasks and to stdlib logging elsewhere"""

    def __init__(self, name: str):
        self.name = name
        self._fallback_logger = logging.getLogger(name)

    def __getattr__(self, name):
        try:
            prefect_logger = get_run_logger()
            return getattr(prefect_logger, name)
        except (RuntimeError, MissingContextError):
            return getattr(self._fallback_logger, name)


def get_flow_aware_logger(name: str = __name__) -> FlowLogger:
    return FlowLogger(name)


def configure_logging(level: str | None = None) -> None:
    """Configure root logging once for command-line use; KSRECON_LOG_LEVEL is the fallback"""
    resolved = (level or os.environ.get("KSRECON_LOG_LEVEL") or DEFAULT_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, resolved, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
