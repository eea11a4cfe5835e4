"""Quality measures, their scaling constants and tilt bounds.

A pattern is either an itemset (sorted tuple of item ids) or a 2-tiling
(a pair of such tuples).  Weights are qualities divided by the scaling
constant ``C`` so that they fall in (0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

from .constraints import ConstraintSet
from .data import TransactionDatabase, mask_of

__all__ = [
    "MEASURES",
    "MeasureError",
    "MeasureSpec",
    "measure_spec",
    "evaluate_quality",
    "weight",
    "is_tiling",
    "itemset_quality",
]

MEASURES = ("uniform", "freq", "purity", "area")


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureSpec:
    kind: str
    scaling_constant: float
    tilt_bound: float

    def __post_init__(self):
        if self.kind not in MEASURES:
            raise MeasureError(f"unknown measure {self.kind!r}")
        if self.scaling_constant <= 0:
            raise MeasureError("scaling constant must be positive")
        if self.tilt_bound < 1:
            raise MeasureError("tilt bound must be >= 1")

    @property
    def C(self) -> float:
        return self.scaling_constant

    @property
    def r_hat(self) -> float:
        return self.tilt_bound

    @property
    def for_tilings(self) -> bool:
        return self.kind == "area"


def is_tiling(pattern) -> bool:
    return bool(pattern) and isinstance(pattern[0], tuple)


def itemset_quality(kind: str, size: int, tids: int, positives: int = 0) -> float:
    """Quality of one itemset from its size and TID bitset."""
    if kind == "uniform":
        return 1.0
    f = tids.bit_count()
    if kind == "freq":
        return float(f)
    if kind == "purity":
        if f == 0:
            raise MeasureError("purity is undefined for an itemset with zero frequency")
        fp = (tids & positives).bit_count()
        return max(fp, f - fp) / f
    if kind == "area":
        return float(f * size)
    raise MeasureError(f"unknown measure {kind!r}")


def evaluate_quality(spec: MeasureSpec, pattern, db: TransactionDatabase) -> float:
    if spec.kind == "area":
        if not is_tiling(pattern):
            raise MeasureError("area is defined on pattern sets")
        return float(sum(db.support(mask_of(p)) * len(p) for p in pattern))
    if is_tiling(pattern):
        raise MeasureError(f"{spec.kind} is defined on single itemsets")
    if spec.kind == "uniform":
        return 1.0
    positives = 0
    if spec.kind == "purity":
        if not db.has_labels:
            raise MeasureError("purity requires a labeled database")
        positives = db.positive_mask
    items = mask_of(pattern)
    return itemset_quality(spec.kind, len(pattern), db.cover(items), positives)


def measure_spec(kind: str, db: TransactionDatabase, constraints: ConstraintSet) -> MeasureSpec:
    """Scaling constant and tilt bound for ``kind`` under ``constraints``."""
    theta = constraints.minfreq
    if theta <= 0:
        raise MeasureError("minfreq must be positive; the tilt would be unbounded")
    if kind == "uniform":
        return MeasureSpec(kind, 1.0, 1.0)
    if kind == "freq":
        return MeasureSpec(kind, float(db.num_transactions), 1.0 / theta)
    if kind == "purity":
        if not db.has_labels:
            raise MeasureError("purity requires a labeled database")
        return MeasureSpec(kind, 1.0, 2.0)
    if kind == "area":
        if not constraints.minlen:
            raise MeasureError("area needs a minlen constraint to bound its tilt")
        ones = sum(r.bit_count() for r in db.rows)
        smallest = 2 * (db.num_transactions * theta) * constraints.minlen
        return MeasureSpec(kind, float(ones), max(1.0, ones / smallest))
    raise MeasureError(f"unknown measure {kind!r}")


def weight(spec: MeasureSpec, quality: float) -> float:
    """``quality / C``; a quality above ``C`` breaks the measure's contract."""
    if quality > spec.scaling_constant * (1 + 1e-12):
        raise MeasureError(f"quality {quality} exceeds scaling constant {spec.scaling_constant}")
    return quality / spec.scaling_constant
