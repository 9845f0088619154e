# utils/logging_config.py

import logging
import sys
from pathlib import Path
from typing import Optional, Union

from es_verify.domain.errors import UsageError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_OWNED = "_es_verify"


def resolve_level(level: Union[int, str]) -> int:
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(str(level).upper())
    if not isinstance(resolved, int):
        raise UsageError(f"unknown log level {level!r}")
    return resolved


def setup_logging(log_file: Optional[str] = None, level: Union[int, str] = logging.INFO) -> None:
    """
    Route log records to stderr, and to ``log_file`` when given.

    Safe to call once per CLI invocation: handlers installed by an earlier
    call are closed and replaced. stdout is left to reports.
    """
    level = resolve_level(level)
    root_logger = logging.getLogger()
    for handler in [h for h in root_logger.handlers if getattr(h, _OWNED, False)]:
        root_logger.removeHandler(handler)
        handler.close()

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    formatter = logging.Formatter(LOG_FORMAT)
    for handler in handlers:
        handler.setFormatter(formatter)
        setattr(handler, _OWNED, True)
        root_logger.addHandler(handler)

    root_logger.setLevel(level)
    logging.getLogger('es_verify').setLevel(level)
