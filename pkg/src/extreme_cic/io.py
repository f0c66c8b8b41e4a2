"""Reading cell-level microdata and writing machine-readable results."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

from .data import CELL_LABELS, EstimationError, QuadData
from .tails import TailTransform

SCHEMA_VERSION = 1
REQUIRED_COLUMNS = ("y", "g", "t")


class InputError(ValueError):
    """Malformed input file."""


def parse_csv(source: Union[str, Path, IO[str]]) -> QuadData:
    """Split a ``y,g,t`` CSV into the four cells.

    Column names are matched case-insensitively and may appear in any order;
    extra columns are ignored. Row numbers in error messages count the header
    as row 1.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return _parse(fh)
    return _parse(source)


def _parse(fh) -> QuadData:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty input") from None
    names = [h.strip().lower() for h in header]
    for col in REQUIRED_COLUMNS:
        if col not in names:
            raise InputError(f"missing column: {col}")
    iy, ig, it = (names.index(c) for c in REQUIRED_COLUMNS)
    cells: dict[str, list[float]] = {lab: [] for lab in CELL_LABELS}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            y = float(row[iy])
        except (ValueError, IndexError):
            raise InputError(f"row {row_no}: cannot parse y") from None
        if not math.isfinite(y):
            raise InputError(f"row {row_no}: y must be finite")
        labels = []
        for idx, col in ((ig, "g"), (it, "t")):
            raw = row[idx].strip() if idx < len(row) else ""
            if raw not in ("0", "1"):
                raise InputError(f"row {row_no}: {col} must be 0 or 1, got {raw!r}")
            labels.append(raw)
        cells["".join(labels)].append(y)
    for lab in CELL_LABELS:
        if not cells[lab]:
            raise InputError(f"empty cell: g={lab[0]}, t={lab[1]}")
    return QuadData.from_arrays(*(cells[lab] for lab in CELL_LABELS))


def write_csv(data: QuadData, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for cell in data:
        for y in cell.outcomes:
            writer.writerow([repr(float(y)), cell.g, cell.t])


def to_csv_string(data: QuadData) -> str:
    buf = io.StringIO()
    write_csv(data, buf)
    return buf.getvalue()


def parse_q_grid(text: str) -> list[float]:
    """``"0.9:0.99:0.01"`` (inclusive range) or ``"0.5,0.99"``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid must look like start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError("grid needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + i * step, 12) for i in range(count)]
    else:
        grid = [float(p) for p in text.split(",") if p.strip()]
    if not grid or any(not 0 < q < 1 for q in grid):
        raise ValueError("quantile levels must lie in (0, 1)")
    return grid


@dataclass(frozen=True)
class RunConfig:
    """Settings for the ``estimate`` command."""

    q_list: tuple = (0.5,)
    method: str = "auto"
    tail: str = "auto"
    transform: TailTransform = TailTransform.NEGATE
    k_rule: str = "guillou_hall"
    k_power: float = 0.5
    k_scale: float = 2.0
    d_floor: float = 10.0
    extreme_low: float = 0.05
    extreme_high: float = 0.95
    se_method: str = "analytic_kernel"
    bootstrap_reps: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("auto", "cic", "ecic"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.tail not in ("auto", "right", "left"):
            raise ValueError(f"unknown tail {self.tail!r}")
        if self.k_rule not in ("guillou_hall", "fixed"):
            raise ValueError(f"unknown k rule {self.k_rule!r}")
        if self.se_method not in ("analytic_kernel", "bootstrap"):
            raise ValueError(f"unknown se method {self.se_method!r}")
        if not self.d_floor > 1:
            raise ValueError("d_floor must exceed 1")
        if not 0 < self.extreme_low < self.extreme_high < 1:
            raise ValueError("need 0 < extreme_low < extreme_high < 1")
        if any(not 0 < q < 1 for q in self.q_list):
            raise ValueError("quantile levels must lie in (0, 1)")


def dumps(payload) -> str:
    """JSON with shortest round-trip float repr and a trailing newline."""
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def error_record(q: float, exc: Exception) -> dict:
    return {"q": q, "error": str(exc)}

