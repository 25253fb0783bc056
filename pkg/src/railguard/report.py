"""Comparison-table rendering for method benchmark reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import RangeError

TABLE_KINDS = ("track_detection", "object_detection")

_HEADERS = {
    "track_detection": ("Method", "Accuracy", "Precision-Recall", "Computational Time (s)"),
    "object_detection": ("Method", "Accuracy", "Precision-Recall", "F1-Score"),
}


@dataclass(frozen=True)
class MethodRow:
    """One comparison row: percentages plus a kind-specific third metric.

    `third` is computational time in seconds for track-detection tables and
    an F1 percentage for object-detection tables.
    """

    method: str
    accuracy: float
    precision_recall: float
    third: float


def _check_percent(value: float, what: str, method: str) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 100.0):
        raise RangeError(f"{what} for {method!r} must be in [0, 100], got {value!r}")


def _validate(rows: Sequence[MethodRow], kind: str) -> None:
    if kind not in TABLE_KINDS:
        raise ValueError(f"unknown table kind {kind!r}")
    if not rows:
        raise ValueError("table needs at least one row")
    for row in rows:
        _check_percent(row.accuracy, "accuracy", row.method)
        _check_percent(row.precision_recall, "precision_recall", row.method)
        if kind == "object_detection":
            _check_percent(row.third, "f1_score", row.method)
        elif not (math.isfinite(row.third) and row.third >= 0.0):
            raise RangeError(
                f"computational time for {row.method!r} must be >= 0, got {row.third!r}"
            )


def _cells(row: MethodRow, kind: str, percent_sign: bool) -> tuple[str, str, str, str]:
    pct = "%" if percent_sign else ""
    # column precision mirrors how these figures are conventionally reported:
    # one decimal for accuracy and time, two for precision-recall, minimal for F1
    third = f"{row.third:.1f}" if kind == "track_detection" else f"{row.third:g}{pct}"
    return (
        row.method,
        f"{row.accuracy:.1f}{pct}",
        f"{row.precision_recall:.2f}{pct}",
        third,
    )


def render_comparison_table(rows: Sequence[MethodRow], kind: str) -> str:
    """Fixed-column text table; deterministic for identical inputs."""
    _validate(rows, kind)
    headers = _HEADERS[kind]
    body = [_cells(row, kind, percent_sign=True) for row in rows]
    widths = [
        max(len(headers[c]), *(len(cells[c]) for cells in body)) for c in range(4)
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for cells in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_comparison_csv(rows: Sequence[MethodRow], kind: str) -> str:
    """Same table as CSV with raw numeric cells (no percent signs)."""
    _validate(rows, kind)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_HEADERS[kind])
    for row in rows:
        writer.writerow(_cells(row, kind, percent_sign=False))
    return out.getvalue()
