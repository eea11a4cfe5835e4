"""Declarative mining constraints shared by the oracles and the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

__all__ = ["ConstraintSet", "parse_constraints"]


@dataclass(frozen=True)
class ConstraintSet:
    """minfreq (as a fraction of |D|), optional closedness and minimum length."""

    minfreq: float
    closed: bool = False
    minlen: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.minfreq <= 1.0:
            raise ValueError("minfreq must be a fraction in [0, 1]")
        if self.minlen is not None and self.minlen < 1:
            raise ValueError("minlen must be >= 1")

    @classmethod
    def from_count(cls, count: int, num_transactions: int, closed: bool = False,
                   minlen: Optional[int] = None) -> "ConstraintSet":
        return cls(count / num_transactions, closed, minlen)

    def theta_abs(self, num_transactions: int) -> int:
        """Absolute support threshold, rounded up (0.09 of 435 -> 40)."""
        return max(1, math.ceil(self.minfreq * num_transactions - 1e-9))

    @property
    def label(self) -> str:
        return "F" + ("C" if self.closed else "") + ("L" if self.minlen else "")

    def __str__(self):
        parts = [f"minfreq={self.minfreq:g}"]
        if self.closed:
            parts.append("closed")
        if self.minlen:
            parts.append(f"minlen={self.minlen}")
        return ",".join(parts)


def parse_constraints(text: str) -> ConstraintSet:
    """Parse tokens like ``minfreq=0.09,closed,minlen=7``."""
    minfreq = None
    closed = False
    minlen = None
    for token in filter(None, (t.strip() for t in text.split(","))):
        key, _, value = token.partition("=")
        key = key.strip().lower()
        if key == "minfreq" and value:
            minfreq = float(value)
        elif key == "closed" and not value:
            closed = True
        elif key == "minlen" and value:
            minlen = int(value)
        else:
            raise ValueError(f"unknown constraint token {token!r}")
    if minfreq is None:
        raise ValueError("a minfreq constraint is required")
    return ConstraintSet(minfreq, closed, minlen)
