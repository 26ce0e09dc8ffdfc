"""Embedded sorted triple store over SQLite.

Four tables mirror the exploded schema: the edge table, its maintained
transpose, the per-column degree table, and the raw numeric table, plus
a small cycle index used by latest-frame and replay lookups. Batches
commit atomically (single writer); readers get WAL snapshot isolation
and never observe a partial batch.
"""

import sqlite3
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .assoc import AssociativeArray, format_value
from .schema import Triple, is_exploded, split_record_key

TABLES = {
    "edge": "t_edge",
    "edge_t": "t_edge_t",
    "deg": "t_deg",
    "raw": "t_raw",
}

_SCHEMA = """
CREATE TABLE IF NOT EXISTS t_edge   (row TEXT NOT NULL, col TEXT NOT NULL, val TEXT NOT NULL, PRIMARY KEY (row, col)) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS t_edge_t (row TEXT NOT NULL, col TEXT NOT NULL, val TEXT NOT NULL, PRIMARY KEY (row, col)) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS t_deg    (row TEXT NOT NULL, col TEXT NOT NULL, val TEXT NOT NULL, PRIMARY KEY (row, col)) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS t_raw    (row TEXT NOT NULL, col TEXT NOT NULL, val TEXT NOT NULL, PRIMARY KEY (row, col)) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS cycles   (source TEXT NOT NULL, ts INTEGER NOT NULL, PRIMARY KEY (source, ts)) WITHOUT ROWID;
"""

KeyRange = Optional[tuple[str, str]]


class StoreUnavailable(RuntimeError):
    pass


class NoData(LookupError):
    pass


@dataclass(frozen=True)
class IngestReceipt:
    count: int
    elapsed: float


def _range_clause(column: str, key_range: KeyRange) -> tuple[str, list[str]]:
    if key_range is None:
        return "", []
    lo, hi = key_range
    if lo > hi:
        raise ValueError(f"range low {lo!r} > high {hi!r}")
    return f" AND {column} BETWEEN ? AND ?", [lo, hi]


class TripleStore:
    """Single-writer embedded store; safe for concurrent readers."""

    def __init__(self, path: "str | Path", fast_writes: bool = False):
        self.path = str(path)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._closed = False
        self._memory = self.path == ":memory:"
        with self._conn:
            if not self._memory:
                self._conn.execute("PRAGMA journal_mode=WAL")
                self._conn.execute(
                    "PRAGMA synchronous=" + ("OFF" if fast_writes else "NORMAL")
                )
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            if not self._closed:
                self._conn.close()
                self._closed = True

    def __enter__(self) -> "TripleStore":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def _check_open(self) -> None:
        if self._closed:
            raise StoreUnavailable(f"store {self.path} is closed")

    def _read_conn(self) -> tuple[sqlite3.Connection, bool]:
        """Fresh snapshot connection; in-memory stores share the writer."""
        self._check_open()
        if self._memory:
            return self._conn, False
        return sqlite3.connect(f"file:{self.path}?mode=ro", uri=True, check_same_thread=False), True

    # -- write path -----------------------------------------------------

    def ingest_batch(self, triples: Iterable[Triple]) -> IngestReceipt:
        """Apply one batch to all four tables atomically.

        The degree table counts only columns that are genuinely new to
        the edge table, so Tdeg always equals Tedge's per-column entry
        counts even when batches are re-ingested.
        """
        self._check_open()
        started = time.monotonic()
        edge: dict[tuple[str, str], str] = {}
        raw: list[tuple[str, str, str]] = []
        cycle_keys: set[tuple[str, int]] = set()
        count = 0
        for row, col, val in triples:
            count += 1
            text = format_value(val)
            if is_exploded(col):
                edge[(row, col)] = text
            else:
                raw.append((row, col, text))
            try:
                ts, source, _ = split_record_key(row)
                cycle_keys.add((source, ts))
            except ValueError:
                pass  # rows that are not record keys don't index a cycle
        with self._lock:
            self._check_open()
            conn = self._conn
            try:
                with conn:
                    conn.execute(
                        "CREATE TEMP TABLE IF NOT EXISTS batch_edge"
                        "(row TEXT NOT NULL, col TEXT NOT NULL, val TEXT NOT NULL,"
                        " PRIMARY KEY (row, col)) WITHOUT ROWID"
                    )
                    conn.execute("DELETE FROM batch_edge")
                    conn.executemany(
                        "INSERT OR REPLACE INTO batch_edge VALUES (?,?,?)",
                        [(r, c, v) for (r, c), v in edge.items()],
                    )
                    conn.execute(
                        "INSERT INTO t_deg(row, col, val)"
                        " SELECT b.col, 'degree', CAST(COUNT(*) AS TEXT) FROM batch_edge b"
                        " WHERE NOT EXISTS (SELECT 1 FROM t_edge e WHERE e.row = b.row AND e.col = b.col)"
                        " GROUP BY b.col"
                        " ON CONFLICT(row, col) DO UPDATE SET"
                        " val = CAST(CAST(val AS INTEGER) + CAST(excluded.val AS INTEGER) AS TEXT)"
                    )
                    conn.execute("INSERT OR REPLACE INTO t_edge SELECT row, col, val FROM batch_edge")
                    conn.execute("INSERT OR REPLACE INTO t_edge_t SELECT col, row, val FROM batch_edge")
                    conn.executemany("INSERT OR REPLACE INTO t_raw VALUES (?,?,?)", raw)
                    conn.executemany(
                        "INSERT OR IGNORE INTO cycles VALUES (?,?)", sorted(cycle_keys)
                    )
            except sqlite3.Error as exc:
                raise StoreUnavailable(str(exc)) from exc
        return IngestReceipt(count, time.monotonic() - started)

    # -- read path ------------------------------------------------------

    def scan(
        self, table: str, row_range: KeyRange = None, col_range: KeyRange = None
    ) -> Iterator[Triple]:
        """Entries of one table within both closed ranges, in key order."""
        sql = f"SELECT row, col, val FROM {TABLES[table]} WHERE 1=1"
        params: list[str] = []
        clause, extra = _range_clause("row", row_range)
        sql += clause
        params += extra
        clause, extra = _range_clause("col", col_range)
        sql += clause
        params += extra
        sql += " ORDER BY row, col"
        conn, ephemeral = self._read_conn()
        try:
            for row, col, val in conn.execute(sql, params):
                yield row, col, float(val)
        finally:
            if ephemeral:
                conn.close()

    def query_range(
        self, table: str, row_range: KeyRange = None, col_range: KeyRange = None
    ) -> AssociativeArray:
        return AssociativeArray(
            {(r, c): v for r, c, v in self.scan(table, row_range, col_range)}
        )

    def cycle_timestamps(
        self, source: Optional[str] = None, lo: Optional[int] = None, hi: Optional[int] = None
    ) -> list[int]:
        """Distinct cycle timestamps, ascending, optionally bounded."""
        sql = "SELECT DISTINCT ts FROM cycles WHERE 1=1"
        params: list[object] = []
        if source is not None:
            sql += " AND source = ?"
            params.append(source)
        if lo is not None:
            sql += " AND ts >= ?"
            params.append(lo)
        if hi is not None:
            sql += " AND ts <= ?"
            params.append(hi)
        sql += " ORDER BY ts"
        conn, ephemeral = self._read_conn()
        try:
            return [row[0] for row in conn.execute(sql, params)]
        finally:
            if ephemeral:
                conn.close()

    def latest_cycle_ts(self, source: str) -> int:
        conn, ephemeral = self._read_conn()
        try:
            row = conn.execute(
                "SELECT MAX(ts) FROM cycles WHERE source = ?", (source,)
            ).fetchone()
        finally:
            if ephemeral:
                conn.close()
        if row is None or row[0] is None:
            raise NoData(f"no cycles ingested for source {source!r}")
        return row[0]

    def cycle_slice(self, source: str, ts: int, table: str = "raw") -> AssociativeArray:
        prefix = f"{ts:010d}|{source}|"
        return self.query_range(table, (prefix, prefix + "￿"))

    def latest_frame(self, source: str, table: str = "raw") -> AssociativeArray:
        """All entries of the newest cycle for a source."""
        return self.cycle_slice(source, self.latest_cycle_ts(source), table)

    # -- maintenance ------------------------------------------------------

    def dump(self, table: str) -> Iterator[str]:
        """Canonical sorted TSV lines (the diffable export format)."""
        for row, col, val in self.scan(table):
            yield f"{row}\t{col}\t{format_value(val)}\n"

    def counts(self) -> dict[str, int]:
        conn, ephemeral = self._read_conn()
        try:
            return {
                name: conn.execute(f"SELECT COUNT(*) FROM {tbl}").fetchone()[0]
                for name, tbl in TABLES.items()
            }
        finally:
            if ephemeral:
                conn.close()
