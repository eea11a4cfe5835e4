"""Transaction databases: parsing, synthesis, and the vertical TID index.

Rows and TID lists are Python ints used as bitsets (bit ``i`` of a row is
item ``i``; bit ``t`` of a TID list is transaction ``t``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

__all__ = [
    "ParseError",
    "TransactionDatabase",
    "VerticalIndex",
    "parse_fimi",
    "parse_cp4im",
    "serialize_fimi",
    "build_vertical_index",
    "generate_synthetic_db",
    "db_stats",
    "bits_of",
    "mask_of",
]

POSITIVE = 1
NEGATIVE = 0


class ParseError(ValueError):
    """Malformed dataset text. ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def bits_of(mask: int) -> tuple:
    """Indices of the set bits of ``mask`` in ascending order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class TransactionDatabase:
    """Immutable binary transaction data with optional class labels.

    ``labels[t]`` is 1 for the positive class and 0 for the negative one.
    """

    num_items: int
    rows: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.num_items < 0:
            raise ValueError("num_items must be non-negative")
        limit = 1 << self.num_items
        for t, row in enumerate(rows):
            if row < 0 or row >= limit:
                raise ValueError(f"transaction {t} references an item >= {self.num_items}")
        if self.labels is not None:
            labels = tuple(int(x) for x in self.labels)
            if len(labels) != len(rows):
                raise ValueError("need exactly one label per transaction")
            if any(x not in (0, 1) for x in labels):
                raise ValueError("labels must be 0 or 1")
            object.__setattr__(self, "labels", labels)

    @property
    def num_transactions(self) -> int:
        return len(self.rows)

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    @property
    def all_items(self) -> int:
        return (1 << self.num_items) - 1

    @property
    def all_transactions(self) -> int:
        return (1 << self.num_transactions) - 1

    @property
    def positive_mask(self) -> int:
        if self.labels is None:
            raise ValueError("database has no class labels")
        return mask_of(t for t, y in enumerate(self.labels) if y == POSITIVE)

    def transactions(self) -> list:
        """Rows as sorted item-id tuples."""
        return [bits_of(r) for r in self.rows]

    def cover(self, items: int) -> int:
        """TID bitset of transactions containing every item of ``items`` (row scan)."""
        tids = 0
        for t, row in enumerate(self.rows):
            if row & items == items:
                tids |= 1 << t
        return tids

    def support(self, items: int) -> int:
        return self.cover(items).bit_count()

    def to_array(self) -> np.ndarray:
        """Dense boolean N x M matrix."""
        out = np.zeros((self.num_transactions, self.num_items), dtype=bool)
        for t, row in enumerate(self.rows):
            out[t, list(bits_of(row))] = True
        return out

    @classmethod
    def from_array(cls, array, labels=None) -> "TransactionDatabase":
        a = np.asarray(array, dtype=bool)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        rows = tuple(mask_of(np.flatnonzero(r).tolist()) for r in a)
        return cls(a.shape[1], rows, None if labels is None else tuple(labels))

    @classmethod
    def from_transactions(cls, transactions: Sequence[Iterable[int]], num_items: Optional[int] = None,
                          labels=None) -> "TransactionDatabase":
        rows = tuple(mask_of(t) for t in transactions)
        if num_items is None:
            num_items = max((r.bit_length() for r in rows), default=0)
        return cls(num_items, rows, None if labels is None else tuple(labels))


@dataclass(frozen=True)
class VerticalIndex:
    """Per-item TID bitsets plus the frequency-ascending item order."""

    tid_lists: tuple
    item_order: tuple

    def frequency(self, item: int) -> int:
        return self.tid_lists[item].bit_count()


def _read(text: Union[str, TextIO]) -> str:
    return text if isinstance(text, str) else text.read()


def _parse_lines(text: Union[str, TextIO]):
    parsed = []
    for lineno, line in enumerate(_read(text).splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        values = []
        for tok in tokens:
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"not an integer: {tok!r}", lineno) from None
            if v < 0:
                raise ParseError(f"negative id: {tok!r}", lineno)
            values.append(v)
        parsed.append((lineno, values))
    if not parsed:
        raise ParseError("empty input")
    return parsed


def parse_fimi(text: Union[str, TextIO]) -> TransactionDatabase:
    """Parse FIMI text: one transaction per line of whitespace-separated item ids."""
    rows = [mask_of(values) for _, values in _parse_lines(text)]
    m = max(r.bit_length() for r in rows)
    return TransactionDatabase(m, tuple(rows))


def parse_cp4im(text: Union[str, TextIO]) -> TransactionDatabase:
    """Parse labeled text where the last token of each line is the class (0 or 1)."""
    rows, labels = [], []
    for lineno, values in _parse_lines(text):
        label = values[-1]
        if label not in (0, 1):
            raise ParseError(f"class label must be 0 or 1, got {label}", lineno)
        rows.append(mask_of(values[:-1]))
        labels.append(label)
    m = max(r.bit_length() for r in rows)
    return TransactionDatabase(m, tuple(rows), tuple(labels))


def serialize_fimi(db: TransactionDatabase) -> str:
    return "".join(" ".join(map(str, bits_of(r))) + "\n" for r in db.rows)


def build_vertical_index(db: TransactionDatabase) -> VerticalIndex:
    tids = [0] * db.num_items
    for t, row in enumerate(db.rows):
        bit = 1 << t
        for i in bits_of(row):
            tids[i] |= bit
    order = sorted(range(db.num_items), key=lambda i: (tids[i].bit_count(), i))
    return VerticalIndex(tuple(tids), tuple(order))


def generate_synthetic_db(num_items: int, num_transactions: int, density: float, seed=None,
                          labeled: bool = False) -> TransactionDatabase:
    """Random database with each bit set independently with probability ``density``.

    With ``labeled=True`` each transaction also gets a fair-coin class label.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    bits = rng.random((num_transactions, num_items)) < density
    labels = rng.integers(0, 2, size=num_transactions).tolist() if labeled else None
    return TransactionDatabase.from_array(bits.reshape(num_transactions, num_items), labels)


def db_stats(db: TransactionDatabase):
    """Return ``(M, N, density, ones_count)``."""
    ones = sum(r.bit_count() for r in db.rows)
    cells = db.num_items * db.num_transactions
    return db.num_items, db.num_transactions, (ones / cells if cells else 0.0), ones
