"""Execute mapping specs against tables and compose harmonized outputs."""

from __future__ import annotations

from pathlib import Path

from .errors import MaterializeError
from .mapspec import Constant, Dictionary, Drop, MappingSpec, Rename
from .tablecore import Table, table_to_csv


def materialize_mapping(input_table: Table, spec: MappingSpec) -> Table:
    """Transform a source table into the harmonized target table.

    Output columns are the non-Drop entry targets in entry order; row count
    is preserved. Absent cells never enter dictionary lookup (None maps to
    None); unmapped values follow the spec's on_missing policy.
    """
    active = [e for e in spec.entries if not isinstance(e.transform, Drop)]
    for entry in active:
        if entry.source not in input_table.columns:
            raise MaterializeError(
                f"spec references column {entry.source!r} missing from table {input_table.name!r}"
            )

    columns = [e.target for e in active]
    transforms = []
    for entry in active:
        index = input_table.columns.index(entry.source)
        lookup = dict(entry.transform.matches) if isinstance(entry.transform, Dictionary) else None
        transforms.append((entry, index, lookup))

    rows: list[list[str | None]] = []
    for row in input_table.rows:
        out_row: list[str | None] = []
        for entry, index, lookup in transforms:
            t = entry.transform
            if isinstance(t, Constant):
                out_row.append(t.value)
                continue
            cell = row[index]
            if isinstance(t, Rename):
                out_row.append(cell)
                continue
            # Dictionary
            if cell is None:
                out_row.append(None)
                continue
            mapped = lookup.get(cell, _MISSING)
            if mapped is not _MISSING:
                out_row.append(mapped)
            elif spec.on_missing == "keep":
                out_row.append(cell)
            elif spec.on_missing == "null":
                out_row.append(None)
            else:
                raise MaterializeError(
                    f"value {cell!r} in column {entry.source!r} is not covered by the mapping"
                )
        rows.append(out_row)
    return Table(name=f"{input_table.name}_harmonized", columns=columns, rows=rows)


_MISSING = object()


def union_tables(parts: list[Table], name: str = "union") -> Table:
    """Concatenate tables over the ordered union of their columns.

    Column order follows first appearance across parts; cells a part lacks
    are filled with absent values. Row count is the sum of the parts'.
    """
    columns: list[str] = []
    for part in parts:
        for col in part.columns:
            if col not in columns:
                columns.append(col)
    rows: list[list[str | None]] = []
    for part in parts:
        indices = {col: i for i, col in enumerate(part.columns)}
        for row in part.rows:
            rows.append([row[indices[col]] if col in indices else None for col in columns])
    return Table(name=name, columns=columns, rows=rows)


def write_table(table: Table, path: str | Path) -> None:
    """Write a table as RFC 4180 CSV (header row, absent cells as empty fields)."""
    Path(path).write_bytes(table_to_csv(table).encode("utf-8"))
