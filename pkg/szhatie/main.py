from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Optional, Sequence

from .core import LOG_FORMAT, configure_logging
from .env import load_env_files

logger = logging.getLogger(__name__)


def _configure_logging_from_environment(default_log_file: Optional[Path]) -> None:
    """Дополнительно настраивает логирование на основе переменных окружения."""

    root_logger = logging.getLogger()

    log_level_name = os.getenv("LOG_LEVEL")
    if log_level_name:
        level = logging.getLevelName(log_level_name.upper())
        if isinstance(level, int):
            root_logger.setLevel(level)
            logger.info("Установлен уровень логирования %s", log_level_name.upper())
        else:
            logger.warning(
                "Неизвестный уровень логирования '%s', использую уровень INFO по умолчанию",
                log_level_name,
            )

    log_file = os.getenv("LOG_FILE")
    if not log_file:
        if default_log_file:
            logger.info("Используется файл логирования по умолчанию %s", default_log_file)
        return

    log_path = Path(log_file).expanduser()
    try:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        for handler in list(root_logger.handlers):
            if isinstance(handler, logging.FileHandler) and default_log_file:
                handler_path = Path(getattr(handler, "baseFilename", ""))
                if handler_path == default_log_file and log_path != default_log_file:
                    root_logger.removeHandler(handler)
                    handler.close()
                    logger.info("Отключено логирование в файл по умолчанию %s", default_log_file)

        if any(
            isinstance(handler, logging.FileHandler)
            and Path(getattr(handler, "baseFilename", "")) == log_path
            for handler in root_logger.handlers
        ):
            logger.debug(
                "Логирование в файл %s уже настроено, повторное добавление пропущено",
                log_path,
            )
        else:
            file_handler = logging.FileHandler(log_path, encoding="utf-8")
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            root_logger.addHandler(file_handler)
            logger.info("Добавлено логирование в файл %s", log_path)
    except OSError as exc:
        logger.error("Не удалось настроить логирование в файл %s: %s", log_path, exc)


def main(argv: Optional[Sequence[str]] = None) -> int:
    base_dir = Path(__file__).resolve().parent
    load_env_files([base_dir / ".env", base_dir.parent / ".env"])

    default_log_file = configure_logging()
    _configure_logging_from_environment(default_log_file)

    # Import the command layer after logging is configured.
    from .commands import run

    return run(argv)


__all__ = ["main"]
