"""Cells: weighted solution lists produced by the bounded oracles."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import List, Tuple

import numpy as np

__all__ = ["Cell", "ArrayCell", "CellBuilder", "CapExceeded"]


@dataclass
class Cell:
    solutions: List[Tuple[object, float]] = field(default_factory=list)
    total_weight: float = 0.0
    truncated: bool = False

    def __len__(self):
        return len(self.solutions)

    @property
    def patterns(self) -> list:
        return [p for p, _ in self.solutions]

    @property
    def min_weight(self) -> float:
        return min((w for _, w in self.solutions), default=math.inf)

    def weight_array(self) -> np.ndarray:
        return np.fromiter((w for _, w in self.solutions), dtype=float, count=len(self.solutions))

    def pattern_at(self, k: int):
        return self.solutions[k][0]

    def weight_at(self, k: int) -> float:
        return self.solutions[k][1]

    def locate(self, u: float) -> int:
        """Index whose cumulative-weight interval contains ``u * total``."""
        running = list(accumulate(w for _, w in self.solutions))
        return min(bisect_right(running, u * running[-1]), len(running) - 1)


class ArrayCell:
    """Cell view over a pattern table; the solution list is built on demand."""

    __slots__ = ("_patterns", "_indices", "_weights", "_running", "total_weight", "truncated")

    def __init__(self, patterns, indices: np.ndarray, weights: np.ndarray, total_weight: float, truncated: bool,
                 running=None):
        self._patterns = patterns
        self._indices = indices
        self._weights = weights
        self._running = running
        self.total_weight = total_weight
        self.truncated = truncated

    def __len__(self):
        return len(self._indices)

    @property
    def solutions(self):
        pats = self._patterns
        return [(pats[i], w) for i, w in zip(self._indices.tolist(), self._weights.tolist())]

    @property
    def patterns(self) -> list:
        pats = self._patterns
        return [pats[i] for i in self._indices.tolist()]

    @property
    def min_weight(self) -> float:
        return float(self._weights.min()) if len(self._weights) else math.inf

    def weight_array(self) -> np.ndarray:
        return self._weights

    def pattern_at(self, k: int):
        return self._patterns[int(self._indices[k])]

    def weight_at(self, k: int) -> float:
        return float(self._weights[k])

    def locate(self, u: float) -> int:
        running = self._running if self._running is not None else np.cumsum(self._weights)
        return min(int(np.searchsorted(running, u * running[-1], side="right")), len(running) - 1)


class CapExceeded(Exception):
    """Raised by :meth:`CellBuilder.add` to unwind a search once the cap is passed."""


class CellBuilder:
    """Accumulates solutions with compensated summation and enforces the cap."""

    __slots__ = ("cap", "solutions", "_sum", "_comp", "truncated")

    def __init__(self, cap: float = math.inf):
        self.cap = cap
        self.solutions: list = []
        self._sum = 0.0
        self._comp = 0.0
        self.truncated = False

    @property
    def total(self) -> float:
        return self._sum

    def add(self, pattern, w: float) -> None:
        self.solutions.append((pattern, w))
        y = w - self._comp
        t = self._sum + y
        self._comp = (t - self._sum) - y
        self._sum = t
        if t > self.cap:
            self.truncated = True
            raise CapExceeded

    def cell(self) -> Cell:
        return Cell(self.solutions, self._sum, self.truncated)
