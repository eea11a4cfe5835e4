"""Bounded oracle over a fully materialized solution list.

Once the complete solution set of a task is known (from either search
oracle), a cell for any XOR system is a parity filter over that list.  The
filter works on solution bitsets: for every variable we keep the set of
solutions in which it is 1, so the solutions with odd parity under a
constraint are the XOR of a few of those sets.  This is what makes
million-sample statistical checks affordable; exactness against the search
oracles is tested.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .cell import ArrayCell, Cell
from .gf2 import XorConstraint

__all__ = ["TableOracle"]

# above this many members the cell is built with numpy instead of a bit loop
_LOOP_LIMIT = 64
_CHUNK = 8


class TableOracle:
    """Cells computed by filtering a fixed, ordered solution list.

    ``masks`` are the XOR-variable assignments of the solutions (ints), and
    ``weights`` their weights in (0, 1].  Truncation follows list order.
    """

    def __init__(self, patterns: Sequence, masks: Sequence[int], weights: Sequence[float],
                 num_vars: int, spec=None, db=None):
        if not (len(patterns) == len(masks) == len(weights)):
            raise ValueError("patterns, masks and weights must align")
        self.patterns = list(patterns)
        self.masks = [int(m) for m in masks]
        self.weights = [float(w) for w in weights]
        self.num_vars = num_vars
        self.spec = spec
        self.db = db
        self._all = (1 << len(self.patterns)) - 1
        ones = [0] * num_vars
        for r, m in enumerate(self.masks):
            if m >> num_vars:
                raise ValueError(f"solution {r} sets a variable >= num_vars")
            while m:
                low = m & -m
                ones[low.bit_length() - 1] |= 1 << r
                m ^= low
        # odd-parity solution sets for every byte of a coefficient row
        tables = []
        for base in range(0, num_vars, _CHUNK):
            width = min(_CHUNK, num_vars - base)
            table = [0] * (1 << width)
            for b in range(1, 1 << width):
                low = b & -b
                table[b] = table[b ^ low] ^ ones[base + low.bit_length() - 1]
            tables.append(table)
        self._tables = tables
        self._weight_array = np.asarray(self.weights, dtype=float)
        self._nbytes = (len(self.patterns) + 7) // 8
        self._index = {p: r for r, p in enumerate(self.patterns)}

    @classmethod
    def from_oracle(cls, oracle) -> "TableOracle":
        """Materialize every solution of ``oracle`` (no XORs, no cap)."""
        cell = oracle.solve_bounded((), math.inf)
        patterns = [p for p, _ in cell.solutions]
        masks = [oracle.pattern_mask(p) for p in patterns]
        weights = [w for _, w in cell.solutions]
        return cls(patterns, masks, weights, oracle.num_vars, getattr(oracle, "spec", None),
                   getattr(oracle, "db", None))

    def __len__(self):
        return len(self.patterns)

    def pattern_mask(self, pattern) -> int:
        return self.masks[self._index[pattern]]

    def member_set(self, xors: Sequence[XorConstraint]) -> int:
        """Bitset over table rows of the solutions satisfying every constraint."""
        members = self._all
        for x in xors:
            odd = 0
            c = x.coefficients
            for table in self._tables:
                odd ^= table[c & 0xFF]
                c >>= _CHUNK
            members &= odd if x.parity else ~odd
            if not members:
                break
        return members

    def solve_bounded(self, xors: Sequence[XorConstraint] = (), cap: float = math.inf) -> Cell:
        members = self.member_set(xors)
        if members.bit_count() > _LOOP_LIMIT:
            return self._dense_cell(members, cap)
        pats, weights = self.patterns, self.weights
        solutions = []
        running = 0.0
        truncated = False
        while members:
            low = members & -members
            r = low.bit_length() - 1
            w = weights[r]
            solutions.append((pats[r], w))
            running += w
            if running > cap:
                truncated = True
                break
            members ^= low
        return Cell(solutions, running, truncated)

    def _dense_cell(self, members: int, cap: float) -> ArrayCell:
        raw = np.frombuffer(members.to_bytes(self._nbytes, "little"), dtype=np.uint8)
        idx = np.flatnonzero(np.unpackbits(raw, bitorder="little"))
        w = self._weight_array[idx]
        # cumsum adds left to right, matching the loop path's running total
        running = np.cumsum(w)
        stop = int(np.searchsorted(running, cap, side="right"))
        truncated = stop < len(idx)
        if truncated:
            idx, w, running = idx[: stop + 1], w[: stop + 1], running[: stop + 1]
        total = float(running[-1]) if len(running) else 0.0
        return ArrayCell(self.patterns, idx, w, total, truncated, running)
