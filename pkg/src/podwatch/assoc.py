"""Associative arrays: sparse matrices whose rows and columns are string keys.

The algebra here (construct from triples, multiply, transpose, range
selection, scalar comparison) is what the ingest, query, and deviation
paths are built on. Arrays are immutable values: every operation returns
a new array, stored zeros never exist, and key iteration is always
lexicographic.
"""

import enum
import math
from typing import Callable, Iterable, Iterator, Union

Triple = tuple[str, str, float]

# Row/column selector: None = all keys, (lo, hi) tuple = closed interval,
# any other iterable = explicit key set.
Selector = Union[None, tuple[str, str], Iterable[str]]


class Collision(enum.Enum):
    """Duplicate (row, col) resolution when building from triples."""

    SUM = "sum"
    LAST = "last"


class CompareOp(enum.Enum):
    LT = "lt"
    GT = "gt"
    NE = "ne"


class InvalidTripleError(ValueError):
    """Triple has an empty key or a non-finite value."""


class InvalidRangeError(ValueError):
    """Range selector with low > high."""


def format_value(v: float) -> str:
    """Canonical decimal text for a value: integral floats lose the '.0'.

    Round-trips exactly through float() and is used for every TSV and
    store serialization so dumps stay diffable.
    """
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _check_triple(row: str, col: str, val: float) -> None:
    if not row or not col:
        raise InvalidTripleError(f"empty key in triple ({row!r}, {col!r})")
    if not math.isfinite(val):
        raise InvalidTripleError(f"non-finite value for ({row!r}, {col!r}): {val!r}")


def _selector_predicate(sel: Selector) -> Callable[[str], bool]:
    if sel is None:
        return lambda _k: True
    if isinstance(sel, tuple) and len(sel) == 2 and isinstance(sel[0], str) and isinstance(sel[1], str):
        lo, hi = sel
        if lo > hi:
            raise InvalidRangeError(f"range low {lo!r} > high {hi!r}")
        return lambda k: lo <= k <= hi
    keys = frozenset(sel)
    return lambda k: k in keys


class AssociativeArray:
    """Immutable sparse matrix keyed by strings.

    Entries with value exactly 0 are structurally absent; the row and
    column key sets are derived from the surviving entries.
    """

    __slots__ = ("_entries", "_rows", "_cols")

    def __init__(self, entries: dict[tuple[str, str], float]):
        clean = {k: float(v) for k, v in entries.items() if v != 0}
        self._entries = clean
        self._rows: tuple[str, ...] = tuple(sorted({r for r, _ in clean}))
        self._cols: tuple[str, ...] = tuple(sorted({c for _, c in clean}))

    # -- construction -------------------------------------------------

    @classmethod
    def empty(cls) -> "AssociativeArray":
        return cls({})

    @classmethod
    def from_triples(
        cls,
        triples: Iterable[Triple],
        collision: Collision = Collision.SUM,
    ) -> "AssociativeArray":
        """Build an array from (row, col, val) triples.

        Duplicate (row, col) keys resolve per the collision policy;
        entries that resolve to 0 are dropped.
        """
        acc: dict[tuple[str, str], float] = {}
        for row, col, val in triples:
            _check_triple(row, col, val)
            key = (row, col)
            if collision is Collision.SUM:
                acc[key] = acc.get(key, 0.0) + val
            else:
                acc[key] = val
        return cls(acc)

    @classmethod
    def identity(cls, keys: Iterable[str]) -> "AssociativeArray":
        return cls({(k, k): 1.0 for k in keys})

    # -- basic access -------------------------------------------------

    @property
    def rows(self) -> tuple[str, ...]:
        return self._rows

    @property
    def cols(self) -> tuple[str, ...]:
        return self._cols

    @property
    def nnz(self) -> int:
        return len(self._entries)

    def get(self, row: str, col: str, default: float = 0.0) -> float:
        return self._entries.get((row, col), default)

    def triples(self) -> Iterator[Triple]:
        """Entries in lexicographic (row, col) order."""
        for row, col in sorted(self._entries):
            yield row, col, self._entries[(row, col)]

    def row_entries(self, row: str) -> list[tuple[str, float]]:
        """(col, val) pairs of one row, in column order."""
        out = [(c, v) for (r, c), v in self._entries.items() if r == row]
        out.sort()
        return out

    def total(self) -> float:
        return sum(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AssociativeArray):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("AssociativeArray is not hashable")

    def __repr__(self) -> str:
        return f"AssociativeArray({self.nnz} entries, {len(self._rows)}x{len(self._cols)})"

    def allclose(self, other: "AssociativeArray", rel: float = 1e-9) -> bool:
        if set(self._entries) != set(other._entries):
            return False
        return all(
            math.isclose(v, other._entries[k], rel_tol=rel, abs_tol=rel)
            for k, v in self._entries.items()
        )

    # -- algebra ------------------------------------------------------

    def multiply(self, other: "AssociativeArray") -> "AssociativeArray":
        """Plus-times product over the overlap of self.cols and other.rows."""
        by_row: dict[str, list[tuple[str, float]]] = {}
        for (r, c), v in other._entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc: dict[tuple[str, str], float] = {}
        for (r, k), va in self._entries.items():
            hits = by_row.get(k)
            if not hits:
                continue
            for c, vb in hits:
                key = (r, c)
                acc[key] = acc.get(key, 0.0) + va * vb
        return AssociativeArray(acc)

    def __matmul__(self, other: "AssociativeArray") -> "AssociativeArray":
        return self.multiply(other)

    def transpose(self) -> "AssociativeArray":
        return AssociativeArray({(c, r): v for (r, c), v in self._entries.items()})

    def add(self, other: "AssociativeArray") -> "AssociativeArray":
        """Elementwise sum; exact cancellations disappear from the result."""
        acc = dict(self._entries)
        for k, v in other._entries.items():
            acc[k] = acc.get(k, 0.0) + v
        return AssociativeArray(acc)

    def scale(self, factor: float) -> "AssociativeArray":
        return AssociativeArray({k: v * factor for k, v in self._entries.items()})

    def spy(self) -> "AssociativeArray":
        """Same sparsity pattern, every value 1."""
        return AssociativeArray({k: 1.0 for k in self._entries})

    def subsref(self, row_sel: Selector = None, col_sel: Selector = None) -> "AssociativeArray":
        """Select entries whose keys satisfy both selectors (closed intervals)."""
        row_ok = _selector_predicate(row_sel)
        col_ok = _selector_predicate(col_sel)
        return AssociativeArray(
            {(r, c): v for (r, c), v in self._entries.items() if row_ok(r) and col_ok(c)}
        )

    def compare_scalar(self, op: CompareOp, threshold: float) -> "AssociativeArray":
        """Keep entries whose value satisfies `value <op> threshold`."""
        if not math.isfinite(threshold):
            raise ValueError(f"threshold must be finite, got {threshold!r}")
        if op is CompareOp.LT:
            keep = lambda v: v < threshold
        elif op is CompareOp.GT:
            keep = lambda v: v > threshold
        else:
            keep = lambda v: v != threshold
        return AssociativeArray({k: v for k, v in self._entries.items() if keep(v)})


# -- TSV triple serialization -----------------------------------------
# One triple per line: row<TAB>col<TAB>value<LF>, UTF-8, no header.


def triples_to_tsv(triples: Iterable[Triple]) -> str:
    return "".join(f"{r}\t{c}\t{format_value(v)}\n" for r, c, v in triples)


def to_tsv(array: AssociativeArray) -> str:
    return triples_to_tsv(array.triples())


def parse_tsv(text: str) -> list[Triple]:
    triples: list[Triple] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise InvalidTripleError(f"line {lineno}: expected 3 tab-separated fields")
        try:
            val = float(parts[2])
        except ValueError as exc:
            raise InvalidTripleError(f"line {lineno}: bad value {parts[2]!r}") from exc
        _check_triple(parts[0], parts[1], val)
        triples.append((parts[0], parts[1], val))
    return triples


def from_tsv(text: str, collision: Collision = Collision.SUM) -> AssociativeArray:
    return AssociativeArray.from_triples(parse_tsv(text), collision)
