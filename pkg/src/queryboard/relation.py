"""In-memory relational store: CSV loading, catalog, column statistics.

Tables are immutable after loading, so the catalog can be shared freely
across concurrent query executions.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from .errors import EmptyTableError, FormatError, UnknownColumnError, UnknownTableError

# A num column with at most this many distinct values may be treated as
# Categorical during visualization mapping.
CATEGORICAL_THRESHOLD = 20

# Widgets need concrete option lists; beyond this cap only min/max are kept
# and continuous widgets are the candidates.
DOMAIN_SAMPLE_CAP = 64

_INT_RE = re.compile(r"^[+-]?\d+$")
_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class ColumnType(Enum):
    NUM = "num"
    STR = "str"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ColumnStats:
    distinct_count: int
    min: Optional[float] = None
    max: Optional[float] = None
    domain_sample: tuple = ()
    low_cardinality: bool = False


@dataclass(frozen=True)
class Column:
    name: str
    ctype: ColumnType
    stats: ColumnStats


@dataclass
class Table:
    name: str
    columns: list[Column]
    rows: list[tuple]

    def column_index(self, name: str) -> int:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        raise UnknownColumnError(f"no column {name!r} in table {self.name!r}")

    def column(self, name: str) -> Column:
        return self.columns[self.column_index(name)]


@dataclass
class TableCatalog:
    tables: dict[str, Table] = field(default_factory=dict)

    def table(self, name: str) -> Table:
        if name not in self.tables:
            raise UnknownTableError(f"no table {name!r} in catalog")
        return self.tables[name]

    def column(self, table: str, column: str) -> Column:
        return self.table(table).column(column)


@dataclass
class ResultTable:
    columns: list[tuple[str, ColumnType]]
    rows: list[tuple]


def parse_number(text: str) -> float | int:
    """Parse a decimal cell; integers stay int so rendering is stable."""
    if _INT_RE.match(text):
        return int(text)
    return float(text)


def is_number(text: str) -> bool:
    return bool(_NUM_RE.match(text))


def compute_stats(ctype: ColumnType, values: list) -> ColumnStats:
    distinct = sorted(set(values), key=lambda v: (str(type(v)), v))
    if ctype is ColumnType.NUM:
        distinct = sorted(set(values))
    sample: tuple = ()
    if len(distinct) <= DOMAIN_SAMPLE_CAP:
        sample = tuple(distinct)
    lo = hi = None
    if ctype is ColumnType.NUM and values:
        lo, hi = min(values), max(values)
    return ColumnStats(
        distinct_count=len(distinct),
        min=lo,
        max=hi,
        domain_sample=sample,
        low_cardinality=len(distinct) <= CATEGORICAL_THRESHOLD,
    )


def build_table(name: str, header: list[str], raw_rows: list[list[str]]) -> Table:
    """Type-infer and register raw CSV cells; shared by load_csv and tests."""
    if len(set(header)) != len(header):
        raise FormatError(f"duplicate header names in table {name!r}: {header}")
    if not raw_rows:
        raise EmptyTableError(f"table {name!r} has no data rows")
    for lineno, row in enumerate(raw_rows, start=2):
        if len(row) != len(header):
            raise FormatError(
                f"table {name!r}: row at line {lineno} has {len(row)} cells, expected {len(header)}"
            )

    columns: list[Column] = []
    typed_cols: list[list[Any]] = []
    for i, col_name in enumerate(header):
        cells = [row[i] for row in raw_rows]
        non_empty = [c for c in cells if c != ""]
        is_num = all(is_number(c) for c in non_empty)
        if is_num:
            if len(non_empty) != len(cells):
                raise FormatError(
                    f"table {name!r}: empty cell in numeric column {col_name!r}"
                )
            values: list[Any] = [parse_number(c) for c in cells]
            ctype = ColumnType.NUM
        else:
            values = list(cells)
            ctype = ColumnType.STR
        typed_cols.append(values)
        columns.append(Column(col_name, ctype, compute_stats(ctype, values)))

    rows = [tuple(typed_cols[i][r] for i in range(len(header))) for r in range(len(raw_rows))]
    return Table(name=name, columns=columns, rows=rows)


def load_csv(path: str | Path, table_name: str, catalog: TableCatalog) -> Table:
    """Load one CSV file (first row header, RFC-4180 style) into the catalog."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError:
        raise
    if not rows:
        raise FormatError(f"{path}: missing header row")
    header, data = rows[0], [r for r in rows[1:] if r]
    table = build_table(table_name, header, data)
    catalog.tables[table_name] = table
    return table


def load_dataset(directory: str | Path) -> TableCatalog:
    """Load every *.csv in a directory; table names are the file stems."""
    directory = Path(directory)
    catalog = TableCatalog()
    paths = sorted(directory.glob("*.csv"))
    if not paths:
        raise FormatError(f"{directory}: no CSV files found")
    for p in paths:
        load_csv(p, p.stem, catalog)
    return catalog
