"""Sampling tasks: database + constraints + measure + oracle choice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .constraints import ConstraintSet
from .data import TransactionDatabase, bits_of, mask_of
from .measures import MeasureSpec, measure_spec

__all__ = ["ORACLES", "TaskError", "Task", "make_oracle", "check_pattern"]

ORACLES = ("eclat", "cp", "table")


class TaskError(ValueError):
    """Inconsistent task configuration."""


@dataclass(frozen=True)
class Task:
    """A constrained sampling task.

    ``oracle="table"`` materializes the solution set once with the CP oracle
    and answers every later cell query by parity filtering.
    """

    db: TransactionDatabase
    constraints: ConstraintSet
    measure: str = "uniform"
    oracle: str = "cp"
    tiling: bool = False

    def __post_init__(self):
        if self.oracle not in ORACLES:
            raise TaskError(f"unknown oracle {self.oracle!r}")
        if self.constraints.minfreq <= 0:
            raise TaskError("minfreq must be positive")
        if self.oracle == "eclat":
            if self.tiling:
                raise TaskError("the eclat oracle cannot sample tilings")
            if self.constraints.closed or self.constraints.minlen:
                raise TaskError("the eclat oracle supports only the minfreq constraint")
        if self.measure == "purity" and not self.db.has_labels:
            raise TaskError("purity requires a labeled (cp4im) dataset")
        if self.measure == "area":
            if not self.tiling:
                raise TaskError("area is a pattern-set measure; use tiling mode")
            if not self.constraints.minlen:
                raise TaskError("tiling mode needs a minlen constraint")
        elif self.tiling:
            raise TaskError("tiling mode samples with the area measure")
        if self.tiling and self.oracle == "eclat":
            raise TaskError("tiling requires the cp oracle")

    @property
    def theta_abs(self) -> int:
        return self.constraints.theta_abs(self.db.num_transactions)

    def spec(self) -> MeasureSpec:
        return measure_spec(self.measure, self.db, self.constraints)

    def with_oracle(self, oracle: str) -> "Task":
        return Task(self.db, self.constraints, self.measure, oracle, self.tiling)


def _search_oracle(task: Task, spec: MeasureSpec, kind: str):
    from .oracle_cp import CpOracle, build_itemset_csp, build_tiling_csp
    from .oracle_eclat import EclatOracle

    if kind == "eclat":
        return EclatOracle(task.db, task.theta_abs, spec)
    if task.tiling:
        csp = build_tiling_csp(task.db, task.theta_abs, task.constraints.minlen,
                               closed=task.constraints.closed)
    else:
        csp = build_itemset_csp(task.db, task.constraints)
    return CpOracle(csp, spec)


def make_oracle(task: Task, spec: Optional[MeasureSpec] = None):
    """Bounded oracle for ``task``; ``spec`` defaults to the task's measure spec."""
    from .oracle_table import TableOracle

    spec = spec or task.spec()
    if task.oracle == "table":
        base = "cp" if (task.tiling or task.constraints.closed or task.constraints.minlen) else "eclat"
        return TableOracle.from_oracle(_search_oracle(task, spec, base))
    return _search_oracle(task, spec, task.oracle)


def _closed(db: TransactionDatabase, items: int, cover: int) -> bool:
    closure = db.all_items
    for t in bits_of(cover):
        closure &= db.rows[t]
    return closure == items


def check_pattern(task: Task, pattern) -> Optional[str]:
    """Definition-level constraint check; returns a violation message or None."""
    db, cons = task.db, task.constraints
    parts = pattern if task.tiling else (pattern,)
    if task.tiling and len(parts) != 2:
        return "a 2-tiling needs exactly two patterns"
    covers = []
    for p in parts:
        if not p:
            return "empty itemset"
        if any(i < 0 or i >= db.num_items for i in p) or list(p) != sorted(set(p)):
            return f"malformed itemset {list(p)}"
        items = mask_of(p)
        cover = db.cover(items)
        if cover.bit_count() < task.theta_abs:
            return f"itemset {list(p)} is infrequent"
        if cons.minlen and len(p) < cons.minlen:
            return f"itemset {list(p)} is shorter than {cons.minlen}"
        if cons.closed and not _closed(db, items, cover):
            return f"itemset {list(p)} is not closed"
        covers.append(cover)
    if task.tiling:
        from .oracle_cp import lex_geq

        if set(parts[0]) & set(parts[1]):
            return "tiling constituents share items"
        if covers[0] & covers[1]:
            return "tiling constituents share transactions"
        if not lex_geq(covers[0], covers[1], db.num_transactions):
            return "tiling violates lexicographic ordering"
    return None
