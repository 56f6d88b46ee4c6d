from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Optional

from .config import LOG_DIR_ENV

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DEFAULT_LOG_FILE: Optional[Path] = None


def _build_default_handlers() -> list[logging.Handler]:
    global DEFAULT_LOG_FILE
    formatter = logging.Formatter(LOG_FORMAT)
    handlers: list[logging.Handler] = []

    # stdout is reserved for command output
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    handlers.append(stream_handler)

    log_directory_env = os.getenv(LOG_DIR_ENV)
    if not log_directory_env:
        DEFAULT_LOG_FILE = None
        return handlers
    log_directory = Path(log_directory_env).expanduser()

    try:
        log_directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:  # pragma: no cover - логирование не настроено
        print(
            f"Не удалось создать каталог для логов {log_directory}: {exc}",
            file=sys.stderr,
        )
        return handlers

    log_path = log_directory / "szhatie.log"
    try:
        file_handler = logging.FileHandler(log_path, encoding="utf-8")
    except OSError as exc:  # pragma: no cover - логирование не настроено
        print(f"Не удалось открыть файл лога {log_path}: {exc}", file=sys.stderr)
    else:
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)
        DEFAULT_LOG_FILE = log_path

    return handlers


def configure_logging(level: int = logging.INFO) -> Optional[Path]:
    """Install the default handlers on the root logger; returns the log file, if any."""

    logging.basicConfig(level=level, handlers=_build_default_handlers(), force=True)
    if DEFAULT_LOG_FILE is not None:
        logging.getLogger(__name__).info(
            "Все запуски будут протоколироваться в файл %s", DEFAULT_LOG_FILE
        )
    return DEFAULT_LOG_FILE


__all__ = ["DEFAULT_LOG_FILE", "LOG_FORMAT", "configure_logging"]
