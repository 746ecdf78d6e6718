"""Tabular data model, CSV ingestion, and target vocabulary loading.

Cells are carried as text. ``None`` marks an absent value and is distinct
from the empty string and from the literal text "NA", which are both data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import CsvFormatError, HarmonkitError, VocabularyError

Cell = str | None

DOMAIN_KINDS = ("enum", "free", "numeric")


@dataclass(frozen=True)
class Table:
    """Named columns over rows of nullable textual cells."""

    name: str
    columns: list[str]
    rows: list[list[str | None]]

    def __post_init__(self):
        seen = set()
        for col in self.columns:
            if col in seen:
                raise HarmonkitError(f"duplicate column name {col!r} in table {self.name!r}")
            seen.add(col)
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise HarmonkitError(
                    f"row {i} of table {self.name!r} has {len(row)} cells, expected {width}"
                )

    def column_index(self, column: str) -> int:
        try:
            return self.columns.index(column)
        except ValueError:
            raise HarmonkitError(f"unknown column {column!r} in table {self.name!r}") from None

    def column_values(self, column: str) -> list[str | None]:
        idx = self.column_index(column)
        return [row[idx] for row in self.rows]


@dataclass(frozen=True)
class Domain:
    """Permissible values of a target attribute: enum, free, or numeric."""

    kind: str
    values: tuple[str, ...] = ()
    min: str | None = None
    max: str | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise VocabularyError(f"unknown domain kind {self.kind!r}")
        if self.kind == "enum":
            if not self.values:
                raise VocabularyError("enumerated domain must contain at least one value")
            if len(set(self.values)) != len(self.values):
                raise VocabularyError("enumerated domain values must be unique")


@dataclass(frozen=True)
class TargetAttribute:
    name: str
    description: str
    domain: Domain


@dataclass(frozen=True)
class TargetSchema:
    """Attributes with descriptions and permissible-value domains."""

    name: str
    attributes: list[TargetAttribute]

    def __post_init__(self):
        seen = set()
        for attr in self.attributes:
            if attr.name in seen:
                raise VocabularyError(f"duplicate attribute name {attr.name!r}")
            seen.add(attr.name)

    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def attribute(self, name: str) -> TargetAttribute:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        raise VocabularyError(f"unknown attribute {name!r} in schema {self.name!r}")

    def domain_of(self, name: str) -> list[str]:
        """Permissible values of an enumerated attribute (empty for free/numeric)."""
        return list(self.attribute(name).domain.values)


# --- CSV ---
#
# The reader is a strict RFC 4180 state machine rather than csv.reader:
# it must distinguish an unquoted empty field (absent value) from a quoted
# empty string, and reject unbalanced quotes and ragged rows outright.


def parse_csv_text(text: str) -> list[list[tuple[str, bool]]]:
    """Parse CSV text into rows of (field_text, was_quoted) pairs."""
    rows: list[list[tuple[str, bool]]] = []
    fields: list[tuple[str, bool]] = []
    buf: list[str] = []
    quoted = False
    in_quotes = False
    line = 1
    i, n = 0, len(text)

    def end_field():
        fields.append(("".join(buf), quoted))
        buf.clear()

    def end_row():
        nonlocal quoted
        end_field()
        rows.append(list(fields))
        fields.clear()
        quoted = False

    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    buf.append('"')
                    i += 2
                    continue
                in_quotes = False
                i += 1
                if i < n and text[i] not in ',\r\n':
                    raise CsvFormatError(f"line {line}: text after closing quote")
                continue
            if ch == "\n":
                line += 1
            buf.append(ch)
            i += 1
        else:
            if ch == '"':
                if buf or quoted:
                    raise CsvFormatError(f"line {line}: quote inside unquoted field")
                quoted = True
                in_quotes = True
                i += 1
            elif ch == ",":
                end_field()
                quoted = False
                i += 1
            elif ch == "\r":
                end_row()
                i += 2 if i + 1 < n and text[i + 1] == "\n" else 1
                line += 1
            elif ch == "\n":
                end_row()
                i += 1
                line += 1
            else:
                buf.append(ch)
                i += 1

    if in_quotes:
        raise CsvFormatError(f"line {line}: unterminated quoted field")
    if buf or fields or quoted:
        end_row()
    return rows


def table_from_csv_text(name: str, text: str, columns: list[str] | None = None) -> Table:
    """Build a table from CSV text with a header row.

    Empty unquoted fields become absent values (None); a quoted empty field
    is the empty string. ``columns`` subsets and reorders the table.
    """
    raw = parse_csv_text(text)
    if not raw:
        raise CsvFormatError(f"{name}: empty CSV, expected a header row")
    header = [field for field, _ in raw[0]]
    width = len(header)
    rows: list[list[str | None]] = []
    for lineno, rec in enumerate(raw[1:], start=2):
        if len(rec) != width:
            raise CsvFormatError(
                f"{name}: row at line {lineno} has {len(rec)} fields, expected {width}"
            )
        rows.append([None if (field == "" and not was_quoted) else field for field, was_quoted in rec])
    table = Table(name=name, columns=header, rows=rows)
    if columns is not None:
        table = project(table, columns)
    return table


def load_table(path: str | Path, columns: list[str] | None = None) -> Table:
    """Load an RFC 4180 CSV file with a header row (see table_from_csv_text)."""
    path = Path(path)
    if not path.is_file():
        raise HarmonkitError(f"file not found: {path}")
    # utf-8-sig: tolerate a BOM, which would otherwise stick to the first header
    return table_from_csv_text(path.stem, path.read_text(encoding="utf-8-sig"), columns=columns)


def project(table: Table, columns: list[str]) -> Table:
    """Subset and reorder a table to the given columns."""
    for col in columns:
        if col not in table.columns:
            raise HarmonkitError(f"requested column {col!r} absent from table {table.name!r}")
    indices = [table.columns.index(c) for c in columns]
    return Table(
        name=table.name,
        columns=list(columns),
        rows=[[row[i] for i in indices] for row in table.rows],
    )


def _format_field(value: str | None) -> str:
    if value is None:
        return ""
    if value == "":
        return '""'
    if any(ch in value for ch in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def table_to_csv(table: Table) -> str:
    """Render a table as RFC 4180 CSV text (CRLF, header row, None as empty field)."""
    lines = [",".join(_format_field(col) for col in table.columns)]
    for row in table.rows:
        lines.append(",".join(_format_field(cell) for cell in row))
    return "\r\n".join(lines) + "\r\n"


def distinct_values(table: Table, column: str) -> list[str]:
    """Sorted set of non-absent cell texts in a column."""
    return sorted({cell for cell in table.column_values(column) if cell is not None})


# --- Vocabulary file format ---

_DOMAIN_KEYS = {"kind", "values", "min", "max"}


def _parse_domain(obj: object, attr_name: str) -> Domain:
    if not isinstance(obj, dict):
        raise VocabularyError(f"attribute {attr_name!r}: domain must be an object")
    unknown = set(obj) - _DOMAIN_KEYS
    if unknown:
        raise VocabularyError(f"attribute {attr_name!r}: unknown domain keys {sorted(unknown)}")
    kind = obj.get("kind")
    if kind not in DOMAIN_KINDS:
        raise VocabularyError(f"attribute {attr_name!r}: domain kind must be one of {DOMAIN_KINDS}")
    if kind == "enum":
        values = obj.get("values")
        if not isinstance(values, list) or not values:
            raise VocabularyError(f"attribute {attr_name!r}: enumerated domain needs a non-empty values list")
        if not all(isinstance(v, str) for v in values):
            raise VocabularyError(f"attribute {attr_name!r}: domain values must be strings")
        if "min" in obj or "max" in obj:
            raise VocabularyError(f"attribute {attr_name!r}: min/max only apply to numeric domains")
        try:
            return Domain(kind="enum", values=tuple(values))
        except VocabularyError as exc:
            raise VocabularyError(f"attribute {attr_name!r}: {exc}") from None
    if "values" in obj:
        raise VocabularyError(f"attribute {attr_name!r}: values only apply to enumerated domains")
    if kind == "free":
        if "min" in obj or "max" in obj:
            raise VocabularyError(f"attribute {attr_name!r}: min/max only apply to numeric domains")
        return Domain(kind="free")
    lo, hi = obj.get("min"), obj.get("max")
    for bound, label in ((lo, "min"), (hi, "max")):
        if bound is not None and not isinstance(bound, str):
            raise VocabularyError(f"attribute {attr_name!r}: {label} must be decimal text")
    return Domain(kind="numeric", min=lo, max=hi)


def parse_vocabulary(obj: object) -> TargetSchema:
    """Validate a decoded vocabulary document into a TargetSchema."""
    if not isinstance(obj, dict):
        raise VocabularyError("vocabulary must be a JSON object")
    unknown = set(obj) - {"name", "attributes"}
    if unknown:
        raise VocabularyError(f"unknown vocabulary keys {sorted(unknown)}")
    name = obj.get("name")
    if not isinstance(name, str):
        raise VocabularyError("vocabulary name must be a string")
    attrs_obj = obj.get("attributes")
    if not isinstance(attrs_obj, list):
        raise VocabularyError("vocabulary attributes must be a list")

    attributes = []
    for entry in attrs_obj:
        if not isinstance(entry, dict):
            raise VocabularyError("each attribute must be an object")
        unknown = set(entry) - {"name", "description", "domain"}
        if unknown:
            raise VocabularyError(f"unknown attribute keys {sorted(unknown)}")
        attr_name = entry.get("name")
        if not isinstance(attr_name, str) or not attr_name:
            raise VocabularyError("attribute name must be a non-empty string")
        description = entry.get("description", "")
        if not isinstance(description, str):
            raise VocabularyError(f"attribute {attr_name!r}: description must be a string")
        domain = _parse_domain(entry.get("domain"), attr_name)
        attributes.append(TargetAttribute(name=attr_name, description=description, domain=domain))
    return TargetSchema(name=name, attributes=attributes)


def load_vocabulary(path: str | Path) -> TargetSchema:
    """Load and validate a vocabulary JSON file."""
    path = Path(path)
    if not path.is_file():
        raise HarmonkitError(f"file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8-sig"))
    except json.JSONDecodeError as exc:
        raise VocabularyError(f"{path}: not valid JSON ({exc})") from None
    return parse_vocabulary(obj)


def vocabulary_to_json(schema: TargetSchema) -> dict:
    """Inverse of parse_vocabulary."""
    attrs = []
    for attr in schema.attributes:
        domain: dict = {"kind": attr.domain.kind}
        if attr.domain.kind == "enum":
            domain["values"] = list(attr.domain.values)
        if attr.domain.kind == "numeric":
            if attr.domain.min is not None:
                domain["min"] = attr.domain.min
            if attr.domain.max is not None:
                domain["max"] = attr.domain.max
        attrs.append({"name": attr.name, "description": attr.description, "domain": domain})
    return {"name": schema.name, "attributes": attrs}
