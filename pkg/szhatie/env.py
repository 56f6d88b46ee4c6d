from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)


def env_int(name: str, *, default: int, minimum: Optional[int] = None) -> int:
    """Integer from the environment; malformed or too small values fall back to ``default``."""

    raw_value = os.getenv(name)
    if raw_value is None or not raw_value.strip():
        return default
    try:
        value = int(raw_value.strip())
    except ValueError:
        logger.warning(
            "Переменная окружения %s содержит не целое число '%s', использую %s",
            name,
            raw_value,
            default,
        )
        return default
    if minimum is not None and value < minimum:
        logger.warning(
            "Значение %s=%s меньше допустимого минимума %s, использую %s",
            name,
            value,
            minimum,
            default,
        )
        return default
    return value


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    # Unquoted values may carry a trailing comment.
    return value.split(" #", 1)[0].rstrip()


def parse_env_text(text: str) -> dict[str, str]:
    """``KEY=value`` pairs of a dotenv file; ``export`` prefixes and comments are allowed."""

    values: dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("export "):
            line = line[len("export "):].lstrip()
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            logger.debug("Строка %d файла окружения не распознана: %s", number, raw_line)
            continue
        values[key] = _unquote(value)
    return values


def load_env_files(paths: Iterable[Path]) -> dict[str, str]:
    """Apply dotenv files in order and return what was set.

    Variables already present in the process environment are never replaced,
    and an earlier file wins over a later one.
    """

    applied: dict[str, str] = {}
    seen: set[Path] = set()
    for path in paths:
        resolved = path.resolve()
        if resolved in seen:
            continue
        seen.add(resolved)
        if not resolved.is_file():
            logger.debug("Файл окружения %s не найден, пропускаю загрузку", resolved)
            continue
        try:
            values = parse_env_text(resolved.read_text(encoding="utf-8"))
        except OSError as exc:
            logger.warning("Не удалось прочитать файл окружения %s: %s", resolved, exc)
            continue
        fresh = {key: value for key, value in values.items() if key not in os.environ}
        os.environ.update(fresh)
        applied.update(fresh)
        logger.info(
            "Загружено %d переменных окружения из %s (пропущено %d уже заданных)",
            len(fresh),
            resolved,
            len(values) - len(fresh),
        )
    return applied


__all__ = ["env_int", "load_env_files", "parse_env_text"]
