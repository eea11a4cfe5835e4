"""Bounded Eclat enumeration of frequent itemsets under XOR constraints.

The search is depth-first over equivalence classes in frequency-ascending
item order.  Every item variable outside the current candidate suffixes is
kept assigned in the branch's XOR system (prefix items to 1, everything
else to 0), so propagation can only ever force candidate suffixes: forced
ones extend the prefix, forced zeros drop out of the suffix set.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .cell import CapExceeded, Cell, CellBuilder
from .data import TransactionDatabase, VerticalIndex, bits_of, build_vertical_index
from .gf2 import XorConstraint, build_system, parity
from .measures import MeasureError, MeasureSpec, itemset_quality

__all__ = ["EclatOracle", "eclat_solve_bounded"]


class EclatOracle:
    """Frequent-itemset oracle; XOR variables are the ``M`` item variables."""

    def __init__(self, db: TransactionDatabase, theta_abs: int, spec: MeasureSpec,
                 index: Optional[VerticalIndex] = None):
        if theta_abs < 1:
            raise ValueError("theta_abs must be >= 1")
        if spec.for_tilings:
            raise MeasureError("the Eclat oracle handles single itemsets only")
        if spec.kind == "purity" and not db.has_labels:
            raise MeasureError("purity requires a labeled database")
        self.db = db
        self.theta = theta_abs
        self.spec = spec
        self.index = index or build_vertical_index(db)
        self.num_vars = db.num_items
        self._positives = db.positive_mask if db.has_labels else 0
        tids = self.index.tid_lists
        self._frequent = [(i, tids[i]) for i in self.index.item_order if tids[i].bit_count() >= theta_abs]
        self.record = False
        self.visited: list = []

    def pattern_mask(self, pattern) -> int:
        m = 0
        for i in pattern:
            m |= 1 << i
        return m

    def solve_bounded(self, xors: Sequence[XorConstraint] = (), cap: float = math.inf) -> Cell:
        self.visited = []
        out = CellBuilder(cap)
        system = build_system(self.num_vars, xors)
        if system.conflict:
            return out.cell()
        self._rows = [(c.coefficients, c.parity) for c in xors]
        frequent_ids = 0
        for i, _ in self._frequent:
            frequent_ids |= 1 << i
        if system.values & system.assigned & ~frequent_ids:
            return out.cell()
        zeros =[(i, 0) for i in range(self.num_vars) if not frequent_ids >> i & 1 and system.is_free(i)]
        # forced values from build_system count as fresh implications at the root
        implied = system.assignments()
        res = system.assign(zeros)
        if res.conflict:
            return out.cell()
        implied = [iv for iv in implied if frequent_ids >> iv[0] & 1] + res.implied
        node = self._stabilize(0, self.db.all_transactions, list(self._frequent), system, implied)
        if node is None:
            return out.cell()
        try:
            pmask, ptids, cands = node
            if pmask:
                self._emit(out, pmask, ptids)
            if cands:
                self._eq_class(out, pmask, cands, system)
        except CapExceeded:
            pass
        return out.cell()

    def _satisfies_xors(self, pmask: int) -> bool:
        return all(parity(c & pmask) == r for c, r in self._rows)

    def _emit(self, out: CellBuilder, pmask: int, ptids: int) -> None:
        if self.record:
            self.visited.append((pmask, ptids.bit_count()))
        if not self._satisfies_xors(pmask):
            return
        q = itemset_quality(self.spec.kind, pmask.bit_count(), ptids, self._positives)
        out.add(bits_of(pmask), q / self.spec.scaling_constant)

    def _stabilize(self, pmask, ptids, cands, system, implied):
        """Fold propagated assignments into the branch until nothing changes.

        Returns ``(prefix, prefix_tids, candidates)`` or None when the branch dies.
        """
        theta = self.theta
        while implied:
            fixed = dict(implied)
            ones = [v for v, b in implied if b]
            if ones:
                tid_of = dict(cands)
                for v in ones:
                    if v not in tid_of:
                        # forced outside the suffix set: the completion is enumerated elsewhere or infrequent
                        return None
                    pmask |= 1 << v
                    ptids &= tid_of[v]
                if ptids.bit_count() < theta:
                    return None
            kept, dropped = [], []
            for f, t in cands:
                if f in fixed:
                    continue
                if ones:
                    t &= ptids
                    if t.bit_count() < theta:
                        dropped.append((f, 0))
                        continue
                kept.append((f, t))
            cands = kept
            if not dropped:
                break
            res = system.assign(dropped)
            if res.conflict:
                return None
            implied = res.implied
        return pmask, ptids, cands

    def _eq_class(self, out: CellBuilder, pmask: int, cands: list, system) -> None:
        theta = self.theta
        n = len(cands)
        for k in range(n):
            s, stids = cands[k]
            fs = []
            updates = [(s, 1)]
            for j in range(n):
                if j == k:
                    continue
                f, ftids = cands[j]
                if j > k:
                    t = ftids & stids
                    if t.bit_count() >= theta:
                        fs.append((f, t))
                        continue
                updates.append((f, 0))
            branch = system.copy()
            res = branch.assign(updates)
            if res.conflict:
                continue
            node = self._stabilize(pmask | 1 << s, stids, fs, branch, res.implied)
            if node is None:
                continue
            child_mask, child_tids, child_cands = node
            self._emit(out, child_mask, child_tids)
            if child_cands:
                self._eq_class(out, child_mask, child_cands, branch)


def eclat_solve_bounded(db: TransactionDatabase, theta_abs: int, xors: Sequence[XorConstraint] = (),
                        cap: float = math.inf, spec: Optional[MeasureSpec] = None) -> Cell:
    """One-shot wrapper around :class:`EclatOracle`; ``spec`` defaults to uniform."""
    if spec is None:
        spec = MeasureSpec("uniform", 1.0, 1.0)
    return EclatOracle(db, theta_abs, spec).solve_bounded(xors, cap)
