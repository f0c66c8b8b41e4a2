"""Containers for the two-group / two-period design."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

CELL_LABELS = ("00", "01", "10", "11")


class EstimationError(ValueError):
    """Raised when an estimator's preconditions fail on the data at hand."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CellSample:
    """Observed outcomes for one (group, period) cell.

    Parameters
    ----------
    outcomes : array_like
        Real-valued outcomes. Copied into a read-only float array.
    g, t : int
        Group and period labels, each 0 or 1.
    """

    outcomes: np.ndarray
    g: int
    t: int

    def __post_init__(self):
        arr = _frozen(self.outcomes)
        if arr.size == 0:
            raise EstimationError(f"empty cell {self.g}{self.t}")
        if not np.all(np.isfinite(arr)):
            raise EstimationError(f"non-finite outcome in cell {self.g}{self.t}")
        if self.g not in (0, 1) or self.t not in (0, 1):
            raise EstimationError(f"cell labels must be binary, got g={self.g}, t={self.t}")
        object.__setattr__(self, "outcomes", arr)
        object.__setattr__(self, "g", int(self.g))
        object.__setattr__(self, "t", int(self.t))

    @property
    def n(self) -> int:
        return int(self.outcomes.size)

    @property
    def label(self) -> str:
        return f"{self.g}{self.t}"

    def with_outcomes(self, outcomes) -> "CellSample":
        return CellSample(outcomes, self.g, self.t)

    def __eq__(self, other):
        if not isinstance(other, CellSample):
            return NotImplemented
        return (self.g, self.t) == (other.g, other.t) and np.array_equal(
            self.outcomes, other.outcomes
        )

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class QuadData:
    """The four cells 00, 01, 10, 11 (group then period)."""

    cell_00: CellSample
    cell_01: CellSample
    cell_10: CellSample
    cell_11: CellSample

    def __post_init__(self):
        for label, cell in zip(CELL_LABELS, self.cells()):
            if cell.label != label:
                raise EstimationError(
                    f"cell_{label} carries labels g={cell.g}, t={cell.t}"
                )

    @classmethod
    def from_arrays(cls, y00, y01, y10, y11) -> "QuadData":
        return cls(
            CellSample(y00, 0, 0),
            CellSample(y01, 0, 1),
            CellSample(y10, 1, 0),
            CellSample(y11, 1, 1),
        )

    def cells(self) -> tuple[CellSample, CellSample, CellSample, CellSample]:
        return (self.cell_00, self.cell_01, self.cell_10, self.cell_11)

    def __iter__(self) -> Iterator[CellSample]:
        return iter(self.cells())

    def cell(self, label: str) -> CellSample:
        return getattr(self, f"cell_{label}")

    def map(self, func) -> "QuadData":
        """Apply ``func`` to each cell's outcome array, keeping labels."""
        return QuadData(*(c.with_outcomes(func(c.outcomes)) for c in self.cells()))

    @property
    def sizes(self) -> dict[str, int]:
        return {c.label: c.n for c in self.cells()}
