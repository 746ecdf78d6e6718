"""Declarative mapping specifications: parse, validate, build, serialize.

The on-disk form is JSON: a bare array of entry objects, or a wrapper
``{"entries": [...], "on_missing": "keep"|"null"|"error"}`` when the
missing-value policy is not the default. Serialization is canonical so
that provenance replay can assert byte equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import SpecError, VocabularyError
from .matchers import ColumnMatch, ValueMatchTable
from .tablecore import Table, TargetSchema, distinct_values

ON_MISSING_POLICIES = ("keep", "null", "error")


@dataclass(frozen=True)
class Dictionary:
    """Map listed source values to target values; others follow on_missing."""

    matches: tuple[tuple[str, str], ...]

    def __post_init__(self):
        sources = [s for s, _ in self.matches]
        if len(set(sources)) != len(sources):
            raise SpecError("duplicate source values inside matches")


@dataclass(frozen=True)
class Rename:
    """Values pass through unchanged."""


@dataclass(frozen=True)
class Constant:
    value: str


@dataclass(frozen=True)
class Drop:
    """Column is not carried into the output."""


Transform = Dictionary | Rename | Constant | Drop


@dataclass(frozen=True)
class MappingEntry:
    source: str
    target: str | None
    transform: Transform

    def __post_init__(self):
        if isinstance(self.transform, Drop):
            if self.target is not None:
                raise SpecError(f"drop entry for {self.source!r} must not have a target")
        elif self.target is None:
            raise SpecError(f"entry for {self.source!r} requires a target")


@dataclass(frozen=True)
class MappingSpec:
    entries: tuple[MappingEntry, ...]
    on_missing: str = "keep"

    def __post_init__(self):
        if self.on_missing not in ON_MISSING_POLICIES:
            raise SpecError(f"unknown on_missing policy {self.on_missing!r}")
        sources, targets = set(), set()
        for i, entry in enumerate(self.entries):
            if entry.source in sources:
                raise SpecError(f"entry {i}: duplicate source column {entry.source!r}")
            sources.add(entry.source)
            if entry.target is not None:
                if entry.target in targets:
                    raise SpecError(f"entry {i}: duplicate target attribute {entry.target!r}")
                targets.add(entry.target)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning | info
    entry: int | None
    message: str


_ENTRY_KEYS = {
    "dictionary": {"source", "target", "matches"},
    "constant": {"source", "target", "constant"},
    "drop": {"source", "drop"},
    "rename": {"source", "target"},
}


def _parse_entry(obj: object, index: int) -> MappingEntry:
    where = f"entry {index}"
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: must be an object")
    if "matches" in obj:
        shape = "dictionary"
    elif "constant" in obj:
        shape = "constant"
    elif "drop" in obj:
        shape = "drop"
    else:
        shape = "rename"
    unknown = set(obj) - _ENTRY_KEYS[shape]
    if unknown:
        raise SpecError(f"{where}: unknown keys {sorted(unknown)}")

    source = obj.get("source")
    if not isinstance(source, str):
        raise SpecError(f"{where}: source must be a string")

    if shape == "drop":
        if obj["drop"] is not True:
            raise SpecError(f"{where}: drop must be true")
        return MappingEntry(source=source, target=None, transform=Drop())

    target = obj.get("target")
    if not isinstance(target, str):
        raise SpecError(f"{where}: target must be a string")

    if shape == "dictionary":
        raw = obj["matches"]
        if not isinstance(raw, list):
            raise SpecError(f"{where}: matches must be an array")
        pairs = []
        for pair in raw:
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair)):
                raise SpecError(f"{where}: each match must be a 2-element array of strings")
            pairs.append((pair[0], pair[1]))
        try:
            transform: Transform = Dictionary(matches=tuple(pairs))
        except SpecError as exc:
            raise SpecError(f"{where}: {exc}") from None
    elif shape == "constant":
        value = obj["constant"]
        if not isinstance(value, str):
            raise SpecError(f"{where}: constant must be a string")
        transform = Constant(value=value)
    else:
        transform = Rename()
    return MappingEntry(source=source, target=target, transform=transform)


def parse_spec(text: str) -> MappingSpec:
    """Parse a mapping-spec JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"not valid JSON: {exc}") from None
    on_missing = "keep"
    if isinstance(doc, dict):
        unknown = set(doc) - {"entries", "on_missing"}
        if unknown:
            raise SpecError(f"unknown top-level keys {sorted(unknown)}")
        if "entries" not in doc:
            raise SpecError("wrapper object requires an entries array")
        on_missing = doc.get("on_missing", "keep")
        if on_missing not in ON_MISSING_POLICIES:
            raise SpecError(f"unknown on_missing policy {on_missing!r}")
        doc = doc["entries"]
    if not isinstance(doc, list):
        raise SpecError("spec must be an array of entries or a wrapper object")
    entries = tuple(_parse_entry(obj, i) for i, obj in enumerate(doc))
    return MappingSpec(entries=entries, on_missing=on_missing)


def _entry_to_json(entry: MappingEntry) -> dict:
    t = entry.transform
    if isinstance(t, Drop):
        return {"source": entry.source, "drop": True}
    out: dict = {"source": entry.source, "target": entry.target}
    if isinstance(t, Dictionary):
        out["matches"] = [[s, v] for s, v in t.matches]
    elif isinstance(t, Constant):
        out["constant"] = t.value
    return out


def serialize_spec(spec: MappingSpec) -> str:
    """Canonical serialization: fixed key order, 2-space indent, idempotent."""
    entries = [_entry_to_json(e) for e in spec.entries]
    payload: object = entries
    if spec.on_missing != "keep":
        payload = {"entries": entries, "on_missing": spec.on_missing}
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def build_spec(column_matches: list[ColumnMatch], value_tables: list[ValueMatchTable]) -> MappingSpec:
    """Compile reviewed matches into a mapping spec.

    Matched columns become Dictionary entries when value matches exist for
    the pair and Rename entries otherwise; abstentions become Drop entries.
    Skipped value tables (non-enumerated domains) contribute nothing.
    """
    matched_pairs = {(m.source_column, m.target_attribute) for m in column_matches if m.target_attribute}
    by_pair: dict[tuple[str, str], ValueMatchTable] = {}
    for table in value_tables:
        if table.skipped:
            continue
        pair = (table.source_column, table.target_attribute)
        if pair not in matched_pairs:
            raise SpecError(
                f"value matches for {pair[0]!r} -> {pair[1]!r} reference a pair absent from the column matches"
            )
        by_pair[pair] = table

    entries = []
    for match in column_matches:
        if match.target_attribute is None:
            entries.append(MappingEntry(source=match.source_column, target=None, transform=Drop()))
            continue
        table = by_pair.get((match.source_column, match.target_attribute))
        if table is None:
            transform: Transform = Rename()
        else:
            pairs = tuple(
                (m.source_value, m.target_value) for m in table.matches if m.target_value is not None
            )
            transform = Dictionary(matches=pairs)
        entries.append(MappingEntry(source=match.source_column, target=match.target_attribute, transform=transform))
    return MappingSpec(entries=tuple(entries))


def validate_spec(spec: MappingSpec, source: Table, target: TargetSchema) -> list[Diagnostic]:
    """Diagnose a spec against a concrete table and vocabulary.

    An empty result means the spec is clean; severities never raise here.
    """
    missing_severity = {"keep": "info", "null": "warning", "error": "error"}[spec.on_missing]
    diagnostics = []
    for i, entry in enumerate(spec.entries):
        if entry.source not in source.columns:
            diagnostics.append(
                Diagnostic("error", i, f"source column {entry.source!r} absent from table {source.name!r}")
            )
            continue
        if entry.target is None:
            continue
        try:
            attribute = target.attribute(entry.target)
        except VocabularyError:
            diagnostics.append(
                Diagnostic("error", i, f"target attribute {entry.target!r} absent from schema {target.name!r}")
            )
            continue
        domain = attribute.domain
        if isinstance(entry.transform, Dictionary):
            if domain.kind == "enum":
                allowed = set(domain.values)
                for _, target_value in entry.transform.matches:
                    if target_value not in allowed:
                        diagnostics.append(
                            Diagnostic(
                                "error", i,
                                f"{target_value!r} is not a permissible value of {entry.target!r}",
                            )
                        )
            covered = {s for s, _ in entry.transform.matches}
            uncovered = [v for v in distinct_values(source, entry.source) if v not in covered]
            if uncovered:
                shown = ", ".join(repr(v) for v in uncovered[:5])
                diagnostics.append(
                    Diagnostic(
                        missing_severity, i,
                        f"column {entry.source!r} has values not covered by the dictionary: {shown}"
                        + (" ..." if len(uncovered) > 5 else ""),
                    )
                )
        elif isinstance(entry.transform, Constant) and domain.kind == "enum":
            if entry.transform.value not in set(domain.values):
                diagnostics.append(
                    Diagnostic(
                        "error", i,
                        f"constant {entry.transform.value!r} is not a permissible value of {entry.target!r}",
                    )
                )
    return diagnostics


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)
