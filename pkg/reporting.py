"""CSV and plain-text output of command results."""
from __future__ import annotations

import contextlib
import csv
import io
import logging
import math
import numbers
import os
import sys
from pathlib import Path
from typing import IO, Iterator, Sequence

LOGGER = logging.getLogger(__name__)

__all__ = [
    "format_value",
    "open_output",
    "parse_value",
    "read_csv",
    "render_table",
    "write_csv",
]

# 17 significant digits round-trip any double
CSV_FLOAT_FORMAT = "{:.16e}"


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, numbers.Real):
        number = float(value)
        if math.isnan(number):
            return "nan"
        return CSV_FLOAT_FORMAT.format(number)
    return str(value)


def parse_value(text: str):
    """Inverse of :func:`format_value`: numbers come back as float, blanks as ``None``."""

    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        return text


def write_csv(stream: IO[str], header: Sequence[str], rows: Sequence[Sequence]) -> None:
    writer = csv.writer(stream, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        writer.writerow([format_value(value) for value in row])


def read_csv(source: str | os.PathLike | IO[str]) -> tuple[list[str], list[dict[str, object]]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as handle:
            return read_csv(handle)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        return [], []
    rows = [dict(zip(header, (parse_value(cell) for cell in row))) for row in reader if row]
    return header, rows


@contextlib.contextmanager
def open_output(path: str | os.PathLike | None) -> Iterator[IO[str]]:
    """Yield a text stream for ``path``; ``None`` means standard output."""

    if path is None:
        yield sys.stdout
        sys.stdout.flush()
        return
    path = Path(path)
    buffer = io.StringIO(newline="")
    yield buffer
    # one write at the end keeps partial files out of the way on errors
    path.write_text(buffer.getvalue(), encoding="utf-8", newline="")
    LOGGER.info("结果已写入 %s", path)


def render_table(
    header: Sequence[str], rows: Sequence[Sequence], *, float_format: str = "{:.6e}"
) -> str:
    """Align ``rows`` under ``header`` for terminal reports."""

    def cell(value) -> str:
        if isinstance(value, float):
            return float_format.format(value)
        return "" if value is None else str(value)

    body = [[cell(value) for value in row] for row in rows]
    widths = [len(title) for title in header]
    for row in body:
        for index, text in enumerate(row):
            widths[index] = max(widths[index], len(text))
    lines = ["  ".join(title.ljust(width) for title, width in zip(header, widths))]
    lines.append("  ".join("-" * width for width in widths))
    for row in body:
        lines.append("  ".join(text.rjust(width) for text, width in zip(row, widths)))
    return "\n".join(lines)
