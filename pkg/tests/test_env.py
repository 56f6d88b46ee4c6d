import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from szhatie.env import env_int, load_env_files, parse_env_text


class ParseEnvTextTests(unittest.TestCase):
    def test_pairs_comments_and_quotes(self) -> None:
        text = "\n".join(
            [
                "# archive settings",
                "SZHATIE_ARCHIVE=runs.db",
                "export SZHATIE_PARALLEL = 4",
                'LOG_FILE="logs/run #1.log"',
                "LOG_LEVEL=debug # verbose",
                "broken line",
                "=orphan",
            ]
        )
        self.assertEqual(
            parse_env_text(text),
            {
                "SZHATIE_ARCHIVE": "runs.db",
                "SZHATIE_PARALLEL": "4",
                "LOG_FILE": "logs/run #1.log",
                "LOG_LEVEL": "debug",
            },
        )


class LoadEnvFilesTests(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self._env = mock.patch.dict(os.environ, {}, clear=False)
        self._env.start()
        for name in ("SZHATIE_ARCHIVE", "SZHATIE_PARALLEL"):
            os.environ.pop(name, None)

    def tearDown(self) -> None:
        self._env.stop()
        self._tmp.cleanup()

    def test_existing_variables_and_earlier_files_win(self) -> None:
        first, second = self.tmp / "first.env", self.tmp / "second.env"
        first.write_text("SZHATIE_ARCHIVE=first.db\n", encoding="utf-8")
        second.write_text("SZHATIE_ARCHIVE=second.db\nSZHATIE_PARALLEL=3\n", encoding="utf-8")
        os.environ["SZHATIE_PARALLEL"] = "2"
        applied = load_env_files([first, second, first, self.tmp / "missing.env"])
        self.assertEqual(applied, {"SZHATIE_ARCHIVE": "first.db"})
        self.assertEqual(os.environ["SZHATIE_ARCHIVE"], "first.db")
        self.assertEqual(os.environ["SZHATIE_PARALLEL"], "2")

    def test_env_int_falls_back(self) -> None:
        os.environ["SZHATIE_PARALLEL"] = "many"
        self.assertEqual(env_int("SZHATIE_PARALLEL", default=1, minimum=1), 1)
        os.environ["SZHATIE_PARALLEL"] = "0"
        self.assertEqual(env_int("SZHATIE_PARALLEL", default=1, minimum=1), 1)
        os.environ["SZHATIE_PARALLEL"] = " 6 "
        self.assertEqual(env_int("SZHATIE_PARALLEL", default=1, minimum=1), 6)


if __name__ == "__main__":
    unittest.main()
