"""Propagation-based bounded oracle for itemsets and non-overlapping 2-tilings.

Variables are binary: ``I[j][i]`` (item ``i`` in pattern ``j``) and
``T[j][t]`` (pattern ``j`` covers transaction ``t``).  Domains are kept as
four bitsets per pattern: items fixed to 1, items fixed to 0, and the same
for transactions.  Search branches on item variables only, lowest index
first, value 1 before 0; transaction variables follow from coverage.
XOR constraints live in one system over all ``k * M`` item variables,
item ``i`` of pattern ``j`` being variable ``j * M + i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .cell import CapExceeded, Cell, CellBuilder
from .constraints import ConstraintSet
from .data import TransactionDatabase, bits_of
from .gf2 import Gf2System, XorConstraint, build_system, parity
from .measures import MeasureError, MeasureSpec, itemset_quality

__all__ = [
    "ConstraintDescriptor",
    "MiningCsp",
    "SearchState",
    "CpOracle",
    "build_itemset_csp",
    "build_tiling_csp",
    "cp_solve_bounded",
    "propagate_to_fixpoint",
    "lex_geq",
]

KINDS = (
    "coverage",
    "minfreq",
    "closed",
    "minlen",
    "nonempty",
    "no_overlap_items",
    "no_overlap_transactions",
    "lex_symmetry",
)


@dataclass(frozen=True)
class ConstraintDescriptor:
    kind: str
    param: Optional[int] = None
    pattern: Optional[int] = None  # None: spans all patterns

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")


@dataclass
class MiningCsp:
    db: TransactionDatabase
    k: int
    constraints: List[ConstraintDescriptor] = field(default_factory=list)

    def _find(self, kind: str, j: int):
        for c in self.constraints:
            if c.kind == kind and c.pattern in (None, j):
                return c
        return None

    def theta(self, j: int) -> int:
        c = self._find("minfreq", j)
        return c.param if c else 0

    def minlen(self, j: int) -> int:
        c = self._find("minlen", j)
        return c.param if c else 0

    def closed(self, j: int) -> bool:
        return self._find("closed", j) is not None

    def nonempty(self, j: int) -> bool:
        return self._find("nonempty", j) is not None

    def has(self, kind: str) -> bool:
        return any(c.kind == kind for c in self.constraints)

    @property
    def num_item_vars(self) -> int:
        return self.k * self.db.num_items


def _pattern_constraints(db, j, theta_abs, closed, minlen):
    n, m = db.num_transactions, db.num_items
    if not 1 <= theta_abs <= n:
        raise ValueError(f"minfreq threshold {theta_abs} outside [1, {n}]")
    if minlen is not None and not 1 <= minlen <= m:
        raise ValueError(f"minlen {minlen} outside [1, {m}]")
    out = [ConstraintDescriptor("coverage", None, j), ConstraintDescriptor("minfreq", theta_abs, j)]
    if closed:
        out.append(ConstraintDescriptor("closed", None, j))
    if minlen:
        out.append(ConstraintDescriptor("minlen", minlen, j))
    out.append(ConstraintDescriptor("nonempty", None, j))
    return out


def build_itemset_csp(db: TransactionDatabase, constraints: ConstraintSet) -> MiningCsp:
    theta = constraints.theta_abs(db.num_transactions)
    return MiningCsp(db, 1, _pattern_constraints(db, 0, theta, constraints.closed, constraints.minlen))


def build_tiling_csp(db: TransactionDatabase, theta_abs: int, minlen: int, k: int = 2,
                     closed: bool = True, symmetry_breaking: bool = True) -> MiningCsp:
    if k != 2:
        raise ValueError("only 2-tilings are supported")
    cons = []
    for j in range(k):
        cons += _pattern_constraints(db, j, theta_abs, closed, minlen)
    cons.append(ConstraintDescriptor("no_overlap_items"))
    cons.append(ConstraintDescriptor("no_overlap_transactions"))
    if symmetry_breaking:
        cons.append(ConstraintDescriptor("lex_symmetry"))
    return MiningCsp(db, k, cons)


def lex_geq(a: int, b: int, n: int) -> bool:
    """Whether bit-vector ``a`` is lexicographically >= ``b``, reading bit 0 first."""
    diff = a ^ b
    if not diff:
        return True
    return bool(a & diff & -diff)


class _Conflict(Exception):
    pass


class SearchState:
    """Per-pattern domain bitsets plus the shared XOR system."""

    __slots__ = ("i1", "i0", "t1", "t0", "xor")

    def __init__(self, i1, i0, t1, t0, xor: Optional[Gf2System]):
        self.i1, self.i0, self.t1, self.t0 = i1, i0, t1, t0
        self.xor = xor

    def copy(self) -> "SearchState":
        return SearchState(self.i1[:], self.i0[:], self.t1[:], self.t0[:],
                           None if self.xor is None else self.xor.copy())

    def key(self):
        return tuple(self.i1), tuple(self.i0), tuple(self.t1), tuple(self.t0)


class CpOracle:
    def __init__(self, csp: MiningCsp, spec: MeasureSpec):
        db = csp.db
        if spec.for_tilings != (csp.k > 1):
            raise MeasureError(f"measure {spec.kind!r} does not fit a k={csp.k} task")
        if spec.kind == "purity" and not db.has_labels:
            raise MeasureError("purity requires a labeled database")
        self.csp = csp
        self.spec = spec
        self.db = db
        self.k = csp.k
        self.M, self.N = db.num_items, db.num_transactions
        self.num_vars = csp.num_item_vars
        self._all_i = db.all_items
        self._all_t = db.all_transactions
        self._rows = db.rows
        self._missing = [self._all_i & ~r for r in db.rows]
        tids = [0] * self.M
        for t, r in enumerate(db.rows):
            for i in bits_of(r):
                tids[i] |= 1 << t
        self._tids = tids
        self._absent = [self._all_t & ~x for x in tids]
        self._positives = db.positive_mask if db.has_labels else 0
        self._theta = [csp.theta(j) for j in range(self.k)]
        self._minlen = [csp.minlen(j) for j in range(self.k)]
        self._closed = [csp.closed(j) for j in range(self.k)]
        self._nonempty = [csp.nonempty(j) for j in range(self.k)]
        self._no_overlap_items = csp.has("no_overlap_items")
        self._no_overlap_tids = csp.has("no_overlap_transactions")
        self._lex = csp.has("lex_symmetry")
        self.branches: list = []
        self.record = False

    def pattern_mask(self, pattern) -> int:
        parts = (pattern,) if self.k == 1 else pattern
        m = 0
        for j, p in enumerate(parts):
            for i in p:
                m |= 1 << (j * self.M + i)
        return m

    # -- propagation -------------------------------------------------------

    def _coverage(self, s: SearchState, j: int) -> None:
        i1, i0, t1, t0 = s.i1[j], s.i0[j], s.t1[j], s.t0[j]
        missing = self._missing
        if t1:
            allowed = self._all_i
            for t in bits_of(t1):
                allowed &= self._rows[t]
            if i1 & ~allowed:
                raise _Conflict
            i0 |= self._all_i & ~allowed
        for t in bits_of(self._all_t & ~(t1 | t0)):
            if i1 & missing[t]:
                t0 |= 1 << t
            elif not missing[t] & ~i0:
                t1 |= 1 << t
        for t in bits_of(t0):
            miss = missing[t]
            if i1 & miss:
                continue
            cand = miss & ~i0
            if not cand:
                raise _Conflict
            if not cand & (cand - 1):
                i1 |= cand
        if i1 & i0 or t1 & t0:
            raise _Conflict
        s.i1[j], s.i0[j], s.t1[j], s.t0[j] = i1, i0, t1, t0

    def _minfreq(self, s: SearchState, j: int) -> None:
        theta = self._theta[j]
        if not theta:
            return
        i1, i0, t1, t0 = s.i1[j], s.i0[j], s.t1[j], s.t0[j]
        for i in bits_of(self._all_i & ~i0):
            possible = self._tids[i] & ~t0
            c = possible.bit_count()
            if c < theta:
                if i1 >> i & 1:
                    raise _Conflict
                i0 |= 1 << i
            elif c == theta and i1 >> i & 1:
                t1 |= possible
        if t1 & t0:
            raise _Conflict
        s.i0[j], s.t1[j] = i0, t1

    def _closed_prop(self, s: SearchState, j: int) -> None:
        i1, i0, t1, t0 = s.i1[j], s.i0[j], s.t1[j], s.t0[j]
        for i in range(self.M):
            absent = self._absent[i]
            bit = 1 << i
            if t1 & absent:
                if i1 & bit:
                    raise _Conflict
                i0 |= bit
            elif not absent & ~t0:
                if i0 & bit:
                    raise _Conflict
                i1 |= bit
            elif i1 & bit:
                t0 |= absent
            elif i0 & bit:
                cand = absent & ~t0
                if not cand & (cand - 1):
                    t1 |= cand
        if t1 & t0 or i1 & i0:
            raise _Conflict
        s.i1[j], s.i0[j], s.t1[j], s.t0[j] = i1, i0, t1, t0

    def _minlen_prop(self, s: SearchState, j: int) -> None:
        lam = self._minlen[j]
        if not lam:
            return
        i1, i0, t1, t0 = s.i1[j], s.i0[j], s.t1[j], s.t0[j]
        for t in bits_of(self._all_t & ~t0):
            possible = self._rows[t] & ~i0
            c = possible.bit_count()
            if c < lam:
                if t1 >> t & 1:
                    raise _Conflict
                t0 |= 1 << t
            elif c == lam and t1 >> t & 1:
                i1 |= possible
        if i1 & i0:
            raise _Conflict
        s.i1[j], s.t0[j] = i1, t0

    def _nonempty_prop(self, s: SearchState, j: int) -> None:
        if not self._nonempty[j] or s.i1[j]:
            return
        possible = self._all_i & ~s.i0[j]
        if not possible:
            raise _Conflict
        if not possible & (possible - 1):
            s.i1[j] |= possible

    def _no_overlap(self, s: SearchState) -> None:
        if self._no_overlap_items:
            if s.i1[0] & s.i1[1]:
                raise _Conflict
            s.i0[0] |= s.i1[1]
            s.i0[1] |= s.i1[0]
        if self._no_overlap_tids:
            if s.t1[0] & s.t1[1]:
                raise _Conflict
            s.t0[0] |= s.t1[1]
            s.t0[1] |= s.t1[0]
        for j in range(self.k):
            if s.i1[j] & s.i0[j] or s.t1[j] & s.t0[j]:
                raise _Conflict

    def _lex_prop(self, s: SearchState) -> None:
        """T of pattern 0 must be lexicographically >= T of pattern 1."""
        a1, a0, b1, b0 = s.t1[0], s.t0[0], s.t1[1], s.t0[1]
        for t in range(self.N):
            bit = 1 << t
            av = 1 if a1 & bit else (0 if a0 & bit else None)
            bv = 1 if b1 & bit else (0 if b0 & bit else None)
            if av is not None and bv is not None:
                if av > bv:
                    return
                if av < bv:
                    raise _Conflict
                continue
            if av == 0:
                b0 |= bit
                s.t0[1] = b0
                continue
            if bv == 1:
                a1 |= bit
                s.t1[0] = a1
                continue
            return

    def _sync_xor(self, s: SearchState) -> None:
        sys = s.xor
        if sys is None:
            return
        M = self.M
        while True:
            ones = zeros = 0
            for j in range(self.k):
                ones |= s.i1[j] << (j * M)
                zeros |= s.i0[j] << (j * M)
            fresh = (ones | zeros) & ~sys.assigned
            if not fresh:
                return
            updates = [(v, ones >> v & 1) for v in bits_of(fresh)]
            res = sys.assign(updates)
            if res.conflict:
                raise _Conflict
            for v, b in res.implied:
                j, i = divmod(v, M)
                if b:
                    s.i1[j] |= 1 << i
                else:
                    s.i0[j] |= 1 << i

    def propagate(self, s: SearchState) -> bool:
        """Run every propagator to a fixpoint; False on conflict."""
        try:
            while True:
                before = s.key()
                for j in range(self.k):
                    self._coverage(s, j)
                    self._minfreq(s, j)
                    if self._closed[j]:
                        self._closed_prop(s, j)
                    self._minlen_prop(s, j)
                    self._nonempty_prop(s, j)
                if self.k > 1:
                    self._no_overlap(s)
                    if self._lex:
                        self._lex_prop(s)
                self._sync_xor(s)
                if s.key() == before:
                    return True
        except _Conflict:
            return False

    # -- search ------------------------------------------------------------

    def initial_state(self, xors: Sequence[XorConstraint] = ()) -> Optional[SearchState]:
        sys = build_system(self.num_vars, xors) if xors else None
        if sys is not None and sys.conflict:
            return None
        k = self.k
        s = SearchState([0] * k, [0] * k, [0] * k, [0] * k, sys)
        if sys is not None:
            for v, b in sys.assignments():
                j, i = divmod(v, self.M)
                if b:
                    s.i1[j] |= 1 << i
                else:
                    s.i0[j] |= 1 << i
        return s

    def _is_solution(self, s: SearchState, xors) -> bool:
        """Definition-level check of a fully assigned state."""
        db = self.db
        covers = []
        for j in range(self.k):
            items = s.i1[j]
            cover = db.cover(items)
            if cover != s.t1[j]:
                return False
            if self._nonempty[j] and not items:
                return False
            if cover.bit_count() < self._theta[j]:
                return False
            if self._minlen[j] and items.bit_count() < self._minlen[j]:
                return False
            if self._closed[j]:
                closure = self._all_i
                for t in bits_of(cover):
                    closure &= self._rows[t]
                if closure != items:
                    return False
            covers.append(cover)
        if self.k > 1:
            if self._no_overlap_items and s.i1[0] & s.i1[1]:
                return False
            if self._no_overlap_tids and covers[0] & covers[1]:
                return False
            if self._lex and not lex_geq(covers[0], covers[1], self.N):
                return False
        mask = 0
        for j in range(self.k):
            mask |= s.i1[j] << (j * self.M)
        return all(parity(x.coefficients & mask) == x.parity for x in xors)

    def _emit(self, out: CellBuilder, s: SearchState) -> None:
        kind = self.spec.kind
        if self.k == 1:
            q = itemset_quality(kind, s.i1[0].bit_count(), s.t1[0], self._positives)
            pattern = bits_of(s.i1[0])
        else:
            q = sum(itemset_quality(kind, s.i1[j].bit_count(), s.t1[j]) for j in range(self.k))
            pattern = tuple(bits_of(s.i1[j]) for j in range(self.k))
        out.add(pattern, q / self.spec.scaling_constant)

    def _free_item(self, s: SearchState):
        for j in range(self.k):
            free = self._all_i & ~(s.i1[j] | s.i0[j])
            if free:
                return j, (free & -free).bit_length() - 1
        return None

    def _search(self, out: CellBuilder, s: SearchState, xors) -> None:
        if not self.propagate(s):
            return
        var = self._free_item(s)
        if var is None:
            if self._is_solution(s, xors):
                self._emit(out, s)
            return
        j, i = var
        if self.record:
            self.branches.append((j, i, s.key()))
        one = s.copy()
        one.i1[j] |= 1 << i
        self._search(out, one, xors)
        s.i0[j] |= 1 << i
        self._search(out, s, xors)

    def solve_bounded(self, xors: Sequence[XorConstraint] = (), cap: float = math.inf) -> Cell:
        out = CellBuilder(cap)
        self.branches = []
        state = self.initial_state(xors)
        if state is None:
            return out.cell()
        try:
            self._search(out, state, list(xors))
        except CapExceeded:
            pass
        return out.cell()


def propagate_to_fixpoint(oracle: CpOracle, state: SearchState) -> str:
    return "consistent" if oracle.propagate(state) else "conflict"


def cp_solve_bounded(csp: MiningCsp, xors: Sequence[XorConstraint] = (), cap: float = math.inf,
                     spec: Optional[MeasureSpec] = None) -> Cell:
    if spec is None:
        spec = MeasureSpec("area", float(max(1, sum(r.bit_count() for r in csp.db.rows))), 1.0) \
            if csp.k > 1 else MeasureSpec("uniform", 1.0, 1.0)
    return CpOracle(csp, spec).solve_bounded(xors, cap)
