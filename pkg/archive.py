from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Awaitable, Callable, Mapping, Optional

import aiosqlite

logger = logging.getLogger(__name__)

DEFAULT_ARCHIVE_PATH = "szhatie_runs.db"


class ArchiveError(RuntimeError):
    """Raised when the run archive is unavailable or holds an unexpected schema."""


@dataclass(frozen=True)
class RunRecord:
    id: int
    kind: str
    case_id: str
    passed: bool
    created_at: str

    def as_dict(self) -> dict[str, Any]:
        return {
            "case": self.case_id,
            "created_at": self.created_at,
            "id": self.id,
            "kind": self.kind,
            "passed": self.passed,
        }


Migration = Callable[[aiosqlite.Connection], Awaitable[None]]


async def _migration_1_initialise_schema_version(conn: aiosqlite.Connection) -> None:
    logger.info("Выполняю миграцию схемы архива #1: инициализация версии схемы")


async def _migration_2_add_payload_size(conn: aiosqlite.Connection) -> None:
    logger.info("Выполняю миграцию схемы архива #2: добавляю размер отчёта")
    cursor = await conn.execute("PRAGMA table_info(runs)")
    columns = {row["name"] for row in await cursor.fetchall()}
    await cursor.close()
    if "payload_size" in columns:
        return
    await conn.execute("ALTER TABLE runs ADD COLUMN payload_size INTEGER")
    await conn.execute("UPDATE runs SET payload_size = LENGTH(payload)")


MIGRATIONS: dict[int, Migration] = {
    1: _migration_1_initialise_schema_version,
    2: _migration_2_add_payload_size,
}

CURRENT_SCHEMA_VERSION = max(MIGRATIONS.keys(), default=0)


class ReportArchive:
    """SQLite archive of emitted reports, one row per ``verify``/``sweep``/``matrix-elements`` run."""

    def __init__(self, path: str = DEFAULT_ARCHIVE_PATH) -> None:
        self._path = path
        self._conn: Optional[aiosqlite.Connection] = None
        self._lock = asyncio.Lock()

    @property
    def path(self) -> str:
        return self._path

    async def connect(self) -> None:
        if self._conn is not None:
            logger.debug("Подключение к архиву уже установлено")
            return
        logger.info("Открываю архив запусков по пути %s", self._path)
        try:
            conn = await aiosqlite.connect(self._path)
        except Exception as exc:  # sqlite3 errors surface with several types
            raise ArchiveError(f"Cannot open archive at {self._path}: {exc}") from exc
        conn.row_factory = aiosqlite.Row
        try:
            await self._initialise_schema(conn)
            await conn.commit()
        except BaseException:
            await conn.close()
            raise
        self._conn = conn
        logger.info("Архив запусков готов")

    async def close(self) -> None:
        if self._conn is not None:
            logger.info("Закрываю архив запусков")
            await self._conn.close()
            self._conn = None

    async def __aenter__(self) -> ReportArchive:
        await self.connect()
        return self

    async def __aexit__(self, *exc_info: object) -> None:
        await self.close()

    def _require(self) -> aiosqlite.Connection:
        if self._conn is None:
            raise ArchiveError("Archive connection is not initialised")
        return self._conn

    async def get_schema_version(self) -> int:
        return await self._get_schema_version(self._require())

    async def save_report(
        self, kind: str, case: str, passed: bool, payload: Mapping[str, Any]
    ) -> int:
        conn = self._require()
        text = json.dumps(payload, sort_keys=True)
        async with self._lock:
            cursor = await conn.execute(
                """
                INSERT INTO runs(kind, case_id, passed, payload, payload_size)
                VALUES(?, ?, ?, ?, ?)
                """,
                (kind, case, int(passed), text, len(text)),
            )
            run_id = int(cursor.lastrowid or 0)
            await cursor.close()
            await conn.commit()
        logger.info("Отчёт %s по случаю %s сохранён в архив под номером %s", kind, case, run_id)
        return run_id

    async def list_runs(self, case: Optional[str] = None) -> list[RunRecord]:
        conn = self._require()
        query = "SELECT id, kind, case_id, passed, created_at FROM runs"
        params: tuple[Any, ...] = ()
        if case is not None:
            query += " WHERE case_id = ?"
            params = (case,)
        query += " ORDER BY id"
        async with self._lock:
            cursor = await conn.execute(query, params)
            rows = await cursor.fetchall()
            await cursor.close()
        logger.debug("Найдено записей в архиве: %s", len(rows))
        return [
            RunRecord(
                id=int(row["id"]),
                kind=str(row["kind"]),
                case_id=str(row["case_id"]),
                passed=bool(row["passed"]),
                created_at=str(row["created_at"]),
            )
            for row in rows
        ]

    async def get_report(self, run_id: int) -> Optional[dict[str, Any]]:
        conn = self._require()
        async with self._lock:
            cursor = await conn.execute("SELECT payload FROM runs WHERE id = ?", (run_id,))
            row = await cursor.fetchone()
            await cursor.close()
        if row is None:
            logger.warning("Запуск #%s отсутствует в архиве", run_id)
            return None
        return json.loads(row["payload"])

    async def _initialise_schema(self, conn: aiosqlite.Connection) -> None:
        logger.debug("Проверяю схему архива")
        await conn.executescript(
            """
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                kind TEXT NOT NULL,
                case_id TEXT NOT NULL,
                passed INTEGER NOT NULL,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                payload TEXT NOT NULL
            );

            CREATE INDEX IF NOT EXISTS runs_case_idx ON runs(case_id);

            CREATE TABLE IF NOT EXISTS config (
                key TEXT PRIMARY KEY,
                value TEXT NOT NULL
            );
            """
        )
        await self._run_migrations(conn)
        logger.debug("Проверка схемы архива завершена")

    async def _get_schema_version(self, conn: aiosqlite.Connection) -> int:
        cursor = await conn.execute(
            "SELECT value FROM config WHERE key = ?",
            ("schema_version",),
        )
        row = await cursor.fetchone()
        await cursor.close()
        if row is None:
            return 0
        raw_value = row["value"]
        try:
            return int(raw_value)
        except (TypeError, ValueError):
            logger.warning(
                "Невалидное значение версии схемы '%s', будет использоваться 0",
                raw_value,
            )
            return 0

    async def _set_schema_version(self, conn: aiosqlite.Connection, version: int) -> None:
        await conn.execute(
            """
            INSERT INTO config(key, value) VALUES(?, ?)
            ON CONFLICT(key) DO UPDATE SET value = excluded.value
            """,
            ("schema_version", str(version)),
        )

    async def _run_migrations(self, conn: aiosqlite.Connection) -> None:
        current_version = await self._get_schema_version(conn)
        if current_version > CURRENT_SCHEMA_VERSION:
            raise ArchiveError(
                "Archive schema version %s is newer than supported version %s"
                % (current_version, CURRENT_SCHEMA_VERSION)
            )
        if current_version == CURRENT_SCHEMA_VERSION:
            logger.debug("Версия схемы архива (%s) актуальна", current_version)
            return

        logger.info(
            "Обновляю схему архива с версии %s до %s",
            current_version,
            CURRENT_SCHEMA_VERSION,
        )
        for next_version in range(current_version + 1, CURRENT_SCHEMA_VERSION + 1):
            migration = MIGRATIONS.get(next_version)
            if migration is None:
                raise ArchiveError(f"No migration available for schema version {next_version}")
            logger.debug("Применяю миграцию #%s", next_version)
            await migration(conn)
            await self._set_schema_version(conn, next_version)

        logger.info("Схема архива обновлена до версии %s", CURRENT_SCHEMA_VERSION)


async def initialise_archive(path: str = DEFAULT_ARCHIVE_PATH) -> None:
    """Create the archive file and its schema if they do not exist yet."""

    path_obj = Path(path)
    if path_obj.parent and not path_obj.parent.exists():
        logger.info("Создаю директорию для архива: %s", path_obj.parent)
        path_obj.parent.mkdir(parents=True, exist_ok=True)

    archive = ReportArchive(str(path_obj))
    try:
        logger.info("Инициализирую архив по пути %s", path_obj)
        await archive.connect()
    finally:
        await archive.close()
        logger.info("Инициализация архива завершена")


if __name__ == "__main__":
    asyncio.run(initialise_archive())
