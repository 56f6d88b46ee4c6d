import tempfile
import unittest
from pathlib import Path

import aiosqlite

from archive import (
    CURRENT_SCHEMA_VERSION,
    ArchiveError,
    ReportArchive,
    initialise_archive,
)


class ReportArchiveTests(unittest.IsolatedAsyncioTestCase):
    async def asyncSetUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.path = str(Path(self._tmp.name) / "nested" / "runs.db")

    async def asyncTearDown(self) -> None:
        self._tmp.cleanup()

    async def test_initialise_creates_schema(self) -> None:
        await initialise_archive(self.path)
        self.assertTrue(Path(self.path).exists())
        async with ReportArchive(self.path) as archive:
            self.assertEqual(await archive.get_schema_version(), CURRENT_SCHEMA_VERSION)
            self.assertEqual(await archive.list_runs(), [])

    async def test_save_list_and_fetch(self) -> None:
        await initialise_archive(self.path)
        async with ReportArchive(self.path) as archive:
            first = await archive.save_report("convergence", "ea-to-h", True, {"case": "ea-to-h", "eps": [0.1]})
            second = await archive.save_report("sweep", "su2-to-iso2", False, {"case": "su2-to-iso2"})
            runs = await archive.list_runs()
            self.assertEqual([r.id for r in runs], [first, second])
            self.assertEqual((runs[1].kind, runs[1].passed), ("sweep", False))
            only = await archive.list_runs("ea-to-h")
            self.assertEqual(len(only), 1)
            self.assertEqual(only[0].as_dict()["case"], "ea-to-h")
            self.assertEqual(await archive.get_report(first), {"case": "ea-to-h", "eps": [0.1]})
            self.assertIsNone(await archive.get_report(42))

    async def test_payload_size_is_recorded(self) -> None:
        await initialise_archive(self.path)
        async with ReportArchive(self.path) as archive:
            run_id = await archive.save_report("convergence", "c-to-h", True, {"a": 1})
        async with aiosqlite.connect(self.path) as conn:
            cursor = await conn.execute("SELECT payload_size FROM runs WHERE id = ?", (run_id,))
            (size,) = await cursor.fetchone()
        self.assertEqual(size, len('{"a": 1}'))

    async def test_rejects_newer_schema(self) -> None:
        await initialise_archive(self.path)
        async with aiosqlite.connect(self.path) as conn:
            await conn.execute(
                "UPDATE config SET value = ? WHERE key = 'schema_version'",
                (str(CURRENT_SCHEMA_VERSION + 1),),
            )
            await conn.commit()
        archive = ReportArchive(self.path)
        with self.assertRaises(ArchiveError):
            await archive.connect()

    async def test_requires_connection(self) -> None:
        archive = ReportArchive(self.path)
        with self.assertRaises(ArchiveError):
            await archive.list_runs()


if __name__ == "__main__":
    unittest.main()
