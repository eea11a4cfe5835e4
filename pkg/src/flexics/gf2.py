"""Parity (XOR) constraints over binary variables and their propagation.

Coefficient rows are packed into Python ints: bit ``j`` is variable ``j``.
A :class:`Gf2System` keeps its rows in reduced row echelon form, ordered by
pivot column (the lowest set bit of each row).  Because the form is fully
reduced, a variable is implied by the system exactly when a row with a single
coefficient exists, so implied assignments are read straight off the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "XorConstraint",
    "Gf2System",
    "Gf2UsageError",
    "PropagationOutcome",
    "draw_random_xor",
    "draw_random_xors",
    "build_system",
    "assign_and_propagate",
    "check_full_assignment",
    "clone_system",
    "parity",
]


class Gf2UsageError(RuntimeError):
    """Operation not permitted in the system's current state."""


def parity(x: int) -> int:
    return x.bit_count() & 1


@dataclass(frozen=True)
class XorConstraint:
    """``XOR_j coefficients_j * x_j == parity`` over ``num_vars`` variables."""

    coefficients: int
    parity: int
    num_vars: int

    def __post_init__(self):
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")
        if self.coefficients < 0 or self.coefficients >> self.num_vars:
            raise ValueError("coefficient bitset wider than num_vars")

    @classmethod
    def from_vars(cls, num_vars: int, variables: Iterable[int], parity_bit: int) -> "XorConstraint":
        m = 0
        for v in variables:
            m ^= 1 << v
        return cls(m, parity_bit, num_vars)

    def holds(self, assignment_mask: int) -> bool:
        return parity(self.coefficients & assignment_mask) == self.parity

    def __str__(self):
        return _format_row(self.coefficients, self.parity, self.num_vars)


def _format_row(coeff: int, rhs: int, n: int) -> str:
    return " ".join("1" if coeff >> j & 1 else "0" for j in range(n)) + f" | {rhs}"


def draw_random_xor(num_vars: int, rng: np.random.Generator) -> XorConstraint:
    """Coefficients and parity bit each drawn independently and uniformly."""
    return draw_random_xors(num_vars, 1, rng)[0]


def draw_random_xors(num_vars: int, count: int, rng: np.random.Generator) -> List[XorConstraint]:
    """``count`` independent random constraints from a single generator call.

    Each constraint takes ``num_vars + 1`` uniform bits out of its own run of
    random bytes: the low ``num_vars`` bits are coefficients, the next one
    the parity.
    """
    if num_vars < 1:
        raise ValueError("num_vars must be >= 1")
    if count <= 0:
        return []
    width = (num_vars + 8) // 8
    raw = rng.bytes(width * count)
    coeff_mask = (1 << num_vars) - 1
    out = []
    for k in range(count):
        v = int.from_bytes(raw[k * width:(k + 1) * width], "little")
        out.append(XorConstraint(v & coeff_mask, v >> num_vars & 1, num_vars))
    return out


@dataclass
class PropagationOutcome:
    implied: List[Tuple[int, int]] = field(default_factory=list)
    conflict: bool = False


class Gf2System:
    """Mutable XOR system with assignment tracking.

    ``rows`` holds ``(coefficients, rhs)`` pairs over the free variables only;
    every recorded assignment has already been substituted.  Once a conflict
    is found the system stays conflicted and refuses further assignments.
    """

    __slots__ = ("num_vars", "rows", "assigned", "values", "conflict")

    def __init__(self, num_vars: int, rows=(), assigned: int = 0, values: int = 0, conflict: bool = False):
        self.num_vars = num_vars
        self.rows = list(rows)
        self.assigned = assigned
        self.values = values
        self.conflict = conflict

    @property
    def status(self) -> str:
        return "conflict" if self.conflict else "consistent"

    def value(self, var: int):
        """0, 1, or None when the variable is free."""
        if self.assigned >> var & 1:
            return self.values >> var & 1
        return None

    def is_free(self, var: int) -> bool:
        return not self.assigned >> var & 1

    def assignments(self) -> List[Tuple[int, int]]:
        """Recorded ``(var, bit)`` pairs in variable order."""
        a, v = self.assigned, self.values
        return [(j, v >> j & 1) for j in range(self.num_vars) if a >> j & 1]

    def copy(self) -> "Gf2System":
        return Gf2System(self.num_vars, self.rows, self.assigned, self.values, self.conflict)

    __copy__ = copy

    def serialize(self) -> str:
        """One ``c1 c2 ... cn | rhs`` line per row."""
        return "\n".join(_format_row(c, r, self.num_vars) for c, r in self.rows)

    def is_echelon(self) -> bool:
        prev = 0
        for coeff, _ in self.rows:
            if coeff == 0:
                return False
            lead = coeff & -coeff
            if lead <= prev:
                return False
            prev = lead
        return True

    def _echelonize(self) -> bool:
        """Gauss-Jordan over the current rows; False on a ``0 = 1`` row."""
        pivots: list = []
        for coeff, rhs in self.rows:
            for p in pivots:
                if coeff & p[0]:
                    coeff ^= p[1]
                    rhs ^= p[2]
            if not coeff:
                if rhs:
                    return False
                continue
            lead = coeff & -coeff
            for p in pivots:
                if p[1] & lead:
                    p[1] ^= coeff
                    p[2] ^= rhs
            pivots.append([lead, coeff, rhs])
        pivots.sort(key=lambda p: p[0])
        self.rows = [(c, r) for _, c, r in pivots]
        return True

    def _substitute(self, var: int, bit: int) -> None:
        m = 1 << var
        self.assigned |= m
        if bit:
            self.values |= m
        rows = self.rows
        for j, (coeff, rhs) in enumerate(rows):
            if coeff & m:
                rows[j] = (coeff ^ m, rhs ^ bit)

    def _settle(self) -> PropagationOutcome:
        implied = []
        while True:
            if not self._echelonize():
                self.conflict = True
                self.rows = []
                return PropagationOutcome([], True)
            units = [(c, r) for c, r in self.rows if not c & (c - 1)]
            if not units:
                return PropagationOutcome(implied, False)
            for coeff, rhs in units:
                var = coeff.bit_length() - 1
                self._substitute(var, rhs)
                implied.append((var, rhs))

    def assign(self, updates: Iterable[Tuple[int, int]]) -> PropagationOutcome:
        if self.conflict:
            raise Gf2UsageError("system is in conflict")
        for var, bit in updates:
            if not self.is_free(var):
                raise Gf2UsageError(f"variable {var} is already assigned")
            self._substitute(var, 1 if bit else 0)
        return self._settle()

    def satisfied_by(self, assignment_mask: int) -> bool:
        """Whether a full assignment agrees with recorded values and all rows."""
        if self.conflict:
            return False
        if (assignment_mask ^ self.values) & self.assigned:
            return False
        return all(parity(c & assignment_mask) == r for c, r in self.rows)


def build_system(num_vars: int, constraints: Sequence[XorConstraint]) -> Gf2System:
    """Echelonize ``constraints`` once; implied assignments are recorded on the system."""
    rows = []
    for c in constraints:
        if c.num_vars != num_vars:
            raise ValueError("constraint sized for a different variable count")
        rows.append((c.coefficients, c.parity))
    system = Gf2System(num_vars, rows)
    system._settle()
    return system


def assign_and_propagate(system: Gf2System, updates: Iterable[Tuple[int, int]]) -> PropagationOutcome:
    return system.assign(updates)


def clone_system(system: Gf2System) -> Gf2System:
    return system.copy()


def check_full_assignment(constraints: Sequence[XorConstraint], assignment: Union[int, Sequence[int]]) -> bool:
    """True iff every constraint's parity over ``assignment`` matches.

    ``assignment`` is either a bitmask or a sequence of 0/1 values.
    """
    if isinstance(assignment, (int, np.integer)):
        mask = int(assignment)
    else:
        mask = 0
        for j, b in enumerate(assignment):
            if b:
                mask |= 1 << j
    return all(parity(c.coefficients & mask) == c.parity for c in constraints)
