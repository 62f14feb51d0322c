"""Record CSV format: header ``run,k,l`` then one ``\\n``-terminated row per run."""

from __future__ import annotations

import re
from typing import Iterable, TextIO

import numpy as np

from .simulator import RecordBatch

HEADER = "run,k,l"
_ROW = re.compile(r"(0|[1-9][0-9]*),(0|-?[1-9][0-9]*),([12])")


class RecordFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_batch(batch: RecordBatch) -> str:
    return "".join(f"{r},{k},{l}\n" for r, k, l in zip(batch.run.tolist(), batch.k.tolist(), batch.l.tolist()))


def write_records(fh: TextIO, batches: Iterable[RecordBatch]) -> None:
    fh.write(HEADER + "\n")
    for batch in batches:
        fh.write(format_batch(batch))


def parse_records(text: str) -> RecordBatch:
    """Parse a record CSV, naming the first offending line on error."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise RecordFormatError(1, "missing header")
    if lines[0] != HEADER:
        raise RecordFormatError(1, f"expected header {HEADER!r}, got {lines[0]!r}")
    rows = np.empty((len(lines) - 1, 3), dtype=np.int64)
    match = _ROW.fullmatch
    for i, line in enumerate(lines[1:]):
        m = match(line)
        if m is None:
            raise RecordFormatError(i + 2, f"malformed row {line!r}")
        rows[i] = (int(m[1]), int(m[2]), int(m[3]))
    return RecordBatch(rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy())


def read_records(path) -> RecordBatch:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_records(fh.read())
