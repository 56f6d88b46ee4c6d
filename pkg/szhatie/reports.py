"""JSON and CSV rendering of reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .direct_limit import MatrixElementSeries

logger = logging.getLogger(__name__)

CONVERGENCE_HEADER = ("case", "generator", "index", "eps", "sup_error", "l2_error")
MATRIX_ELEMENT_HEADER = (
    "case",
    "generator",
    "m",
    "s",
    "l",
    "re",
    "im",
    "target_re",
    "target_im",
    "abs_error",
)


def dumps(payload: Mapping[str, Any]) -> str:
    """Canonical text of a report; identical payloads give identical bytes."""

    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _render(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def convergence_rows(payload: Mapping[str, Any]) -> list[tuple[Any, ...]]:
    """One row per (generator, schedule point), generators by name, eps descending."""

    indices = payload["schedule"].get("indices")
    rows = []
    for generator in payload["generators"]:
        for position, eps in enumerate(generator["eps"]):
            rows.append(
                (
                    payload["case"],
                    generator["name"],
                    "" if indices is None else indices[position],
                    eps,
                    generator["sup_errors"][position],
                    generator["l2_errors"][position],
                )
            )
    rows.sort(key=lambda row: (row[1], -row[3]))
    return rows


def convergence_csv(payload: Mapping[str, Any]) -> str:
    return _render(CONVERGENCE_HEADER, convergence_rows(payload))


def matrix_elements_payload(
    radius: float,
    m_max: int,
    l_schedule: Sequence[int],
    series: Sequence[MatrixElementSeries],
    tolerance: float,
) -> dict[str, Any]:
    worst = max(item.final_error for item in series)
    return {
        "case": "su2-to-iso2",
        "final_error": worst,
        "kind": "matrix-elements",
        "l_schedule": [int(l) for l in l_schedule],
        "m_max": m_max,
        "params": {"R": repr(float(radius))},
        "passed": worst <= tolerance,
        "series": [item.as_dict() for item in series],
        "tolerance": tolerance,
    }


def matrix_elements_csv(payload: Mapping[str, Any]) -> str:
    rows = []
    for item in payload["series"]:
        target_re, target_im = item["target"]
        for value in item["values"]:
            rows.append(
                (
                    payload["case"],
                    item["generator"],
                    item["m"],
                    item["s"],
                    value["l"],
                    value["re"],
                    value["im"],
                    target_re,
                    target_im,
                    value["abs_error"],
                )
            )
    return _render(MATRIX_ELEMENT_HEADER, rows)


def write_text(path: str, text: str) -> None:
    target = Path(path)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info("Отчёт записан в %s", target)


__all__ = [
    "CONVERGENCE_HEADER",
    "MATRIX_ELEMENT_HEADER",
    "convergence_csv",
    "convergence_rows",
    "dumps",
    "matrix_elements_csv",
    "matrix_elements_payload",
    "write_text",
]
