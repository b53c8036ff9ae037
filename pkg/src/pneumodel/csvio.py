"""CSV tables with units in the column names."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass


class CsvFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CsvTable:
    header: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(set(self.header)) != len(self.header):
            raise CsvFormatError(f"duplicate column names in {self.header}")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.header):
                raise CsvFormatError(
                    f"row {i} has {len(row)} fields, header has {len(self.header)}")

    def column(self, name: str) -> list[float]:
        k = self.header.index(name)
        return [r[k] for r in self.rows]


def format_number(v: float) -> str:
    """Six significant digits, with negative zero written as ``0``."""
    text = f"{float(v):.6g}"
    if text in ("-0", "-0.0"):
        return "0"
    return text if math.isfinite(v) else text.lower()


def format_csv(table: CsvTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.header)
    for row in table.rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()


def parse_csv(text: str) -> CsvTable:
    reader = csv.reader(io.StringIO(text))
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise CsvFormatError("empty CSV") from None
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            rows.append(tuple(float(v) for v in row))
        except ValueError:
            raise CsvFormatError(f"line {lineno}: non-numeric field in {row}") from None
    return CsvTable(header, tuple(rows))
