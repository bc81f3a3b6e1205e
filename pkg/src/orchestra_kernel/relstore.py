"""Embedded relational store over CSV-seeded tables.

Tables live in memory as column/row dicts; SQL execution (the minimal
SELECT/WHERE/IN/LIKE + single-JOIN subset) is delegated to an in-memory
sqlite database rebuilt from the attached tables.
"""
from __future__ import annotations

import csv
import re
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UnknownTable


@dataclass
class TableData:
    name: str
    columns: list
    rows: list  # list of dicts keyed by column name

    def to_payload(self) -> dict:
        return {"columns": list(self.columns),
                "rows": [[row.get(c) for c in self.columns] for row in self.rows]}

    @staticmethod
    def from_payload(payload: dict, name: str = "") -> "TableData":
        columns = list(payload["columns"])
        rows = [dict(zip(columns, values)) for values in payload["rows"]]
        return TableData(name=name, columns=columns, rows=rows)


def _coerce_column(values: list) -> list:
    if all(re.fullmatch(r"-?\d+", v) for v in values if v != ""):
        return [int(v) if v != "" else None for v in values]
    if all(re.fullmatch(r"-?\d+(\.\d+)?", v) for v in values if v != ""):
        return [float(v) if v != "" else None for v in values]
    return [v if v != "" else None for v in values]


def load_csv(path, name: str = "") -> TableData:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        raw_rows = [row for row in reader]
    columns = list(header)
    by_col = {c: [row[i] for row in raw_rows] for i, c in enumerate(columns)}
    coerced = {c: _coerce_column(vals) for c, vals in by_col.items()}
    rows = [{c: coerced[c][i] for c in columns} for i in range(len(raw_rows))]
    return TableData(name=name or path.stem, columns=columns, rows=rows)


_SELECT_ONLY = re.compile(r"^\s*select\b", re.IGNORECASE)


class RelStore:
    """Holds named tables and executes the supported SQL subset against them."""

    def __init__(self):
        self._tables: dict[str, TableData] = {}
        self._lock = threading.Lock()

    def attach(self, table: TableData) -> None:
        with self._lock:
            self._tables[table.name.lower()] = table

    def table(self, name: str) -> TableData:
        with self._lock:
            table = self._tables.get(name.lower())
        if table is None:
            raise UnknownTable(f"unknown table: {name}")
        return table

    def tables(self) -> list:
        with self._lock:
            return sorted(self._tables)

    def has_table(self, name: str) -> bool:
        with self._lock:
            return name.lower() in self._tables

    def query(self, sql: str) -> TableData:
        """Run a SELECT statement; rejects anything else."""
        if not _SELECT_ONLY.match(sql or ""):
            raise ParseError(f"unsupported statement (SELECT only): {sql!r}")
        conn = sqlite3.connect(":memory:")
        try:
            with self._lock:
                tables = list(self._tables.values())
            for table in tables:
                col_defs = ", ".join(f'"{c}"' for c in table.columns)
                conn.execute(f'CREATE TABLE "{table.name.lower()}" ({col_defs})')
                placeholders = ", ".join("?" for _ in table.columns)
                conn.executemany(
                    f'INSERT INTO "{table.name.lower()}" VALUES ({placeholders})',
                    [[row.get(c) for c in table.columns] for row in table.rows])
            try:
                cursor = conn.execute(sql)
            except sqlite3.OperationalError as exc:
                text = str(exc)
                if "no such table" in text:
                    raise UnknownTable(text) from exc
                raise ParseError(text) from exc
            columns = [d[0] for d in cursor.description or []]
            rows = [dict(zip(columns, values)) for values in cursor.fetchall()]
            return TableData(name="result", columns=columns, rows=rows)
        finally:
            conn.close()
