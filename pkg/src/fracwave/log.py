"""Logging setup: stdlib loggers rendered through rich."""

import logging
import os
from typing import Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

LOG_ENV_VAR = "FRACWAVE_LOG"
DEFAULT_LEVEL = "warning"

_configured = False


def log_level() -> int:
    """Resolve the verbosity from FRACWAVE_LOG (a .env file is honored)."""
    load_dotenv()
    name = os.getenv(LOG_ENV_VAR, DEFAULT_LEVEL).strip().upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        return logging.WARNING
    return level


def configure_logging(level: Optional[int] = None) -> None:
    """Attach a stderr RichHandler to the package logger (idempotent)."""
    global _configured
    root = logging.getLogger("fracwave")
    root.setLevel(log_level() if level is None else level)
    if _configured:
        return
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        markup=False,
        rich_tracebacks=False,
    )
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
    root.propagate = False
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """Return a module logger under the ``fracwave`` hierarchy."""
    if not name.startswith("fracwave"):
        name = f"fracwave.{name}"
    return logging.getLogger(name)
