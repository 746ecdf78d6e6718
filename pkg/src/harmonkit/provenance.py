"""Append-only session provenance: JSON-Lines log, deterministic replay, tracing.

Every tool call, reviewer decision, and user decision is persisted before
its effect is returned to the caller (write-ahead). Timestamps are carried
for inspection but excluded from equality and replay.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO

from .errors import ProvenanceError, SpecError

RECORD_KINDS = frozenset(
    {
        "user_prompt",
        "tool_call",
        "tool_result",
        "reviewer_decision",
        "user_decision",
        "question",
        "answer",
        "artifact",
    }
)


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _canonical_payload(payload: object) -> object:
    # normalizes nested dict key order so identical payloads always
    # serialize to identical bytes
    return json.loads(json.dumps(payload, sort_keys=True, ensure_ascii=False))


@dataclass(frozen=True)
class ProvenanceRecord:
    seq: int
    session_id: str
    ts: str
    kind: str
    payload: object
    parent_seq: int | None = None

    def to_json_obj(self, include_ts: bool = True) -> dict:
        out: dict = {"seq": self.seq, "session_id": self.session_id}
        if include_ts:
            out["ts"] = self.ts
        out["kind"] = self.kind
        out["payload"] = self.payload
        if self.parent_seq is not None:
            out["parent_seq"] = self.parent_seq
        return out

    def to_line(self) -> str:
        return json.dumps(self.to_json_obj(), ensure_ascii=False)

    @classmethod
    def from_json_obj(cls, obj: dict) -> ProvenanceRecord:
        keys = set(obj)
        if not {"seq", "session_id", "ts", "kind", "payload"} <= keys:
            raise ProvenanceError(f"record missing required keys: {sorted(keys)}")
        unknown = keys - {"seq", "session_id", "ts", "kind", "payload", "parent_seq"}
        if unknown:
            raise ProvenanceError(f"record has unknown keys {sorted(unknown)}")
        return cls(
            seq=obj["seq"],
            session_id=obj["session_id"],
            ts=obj["ts"],
            kind=obj["kind"],
            payload=obj["payload"],
            parent_seq=obj.get("parent_seq"),
        )


class ProvenanceLog:
    """Strictly ordered, append-only record sequence with an optional file sink."""

    def __init__(self, session_id: str, path: str | Path | None = None):
        self.session_id = session_id
        self.path = Path(path) if path is not None else None
        self.records: list[ProvenanceRecord] = []
        self._sink: IO[str] | None = None

    def append(self, record: ProvenanceRecord) -> None:
        expected = len(self.records)
        if record.seq != expected:
            raise ProvenanceError(f"sequence gap: got seq {record.seq}, expected {expected}")
        if record.kind not in RECORD_KINDS:
            raise ProvenanceError(f"unknown record kind {record.kind!r}")
        if record.parent_seq is not None and not (0 <= record.parent_seq < record.seq):
            raise ProvenanceError(f"parent_seq {record.parent_seq} must precede seq {record.seq}")
        if record.session_id != self.session_id:
            raise ProvenanceError("record belongs to a different session")
        if self.path is not None:
            if self._sink is None:
                self._sink = self.path.open("a", encoding="utf-8")
            self._sink.write(record.to_line() + "\n")
            self._sink.flush()
        self.records.append(record)

    def add(self, kind: str, payload: object, parent_seq: int | None = None) -> ProvenanceRecord:
        """Create, persist, and return the next record."""
        record = ProvenanceRecord(
            seq=len(self.records),
            session_id=self.session_id,
            ts=datetime.now(timezone.utc).isoformat(),
            kind=kind,
            payload=_canonical_payload(payload),
            parent_seq=parent_seq,
        )
        self.append(record)
        return record

    def close(self) -> None:
        if self._sink is not None:
            self._sink.close()
            self._sink = None

    def last_seq(self) -> int:
        return len(self.records) - 1

    def canonical_lines(self, include_ts: bool = False) -> list[str]:
        return [json.dumps(r.to_json_obj(include_ts=include_ts), ensure_ascii=False) for r in self.records]

    @classmethod
    def load(cls, path: str | Path) -> ProvenanceLog:
        path = Path(path)
        lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
        if not lines:
            raise ProvenanceError(f"{path}: empty provenance log")
        first = ProvenanceRecord.from_json_obj(json.loads(lines[0]))
        log = cls(session_id=first.session_id)
        for line in lines:
            log.append(ProvenanceRecord.from_json_obj(json.loads(line)))
        log.path = path
        return log


def records_of_kind(log: ProvenanceLog, kind: str) -> list[ProvenanceRecord]:
    return [r for r in log.records if r.kind == kind]


def replay(log: ProvenanceLog, base_dir: str | Path | None = None):
    """Re-execute a completed session log and reproduce its mapping spec.

    Tool calls are re-executed against the recorded fixtures; reviewer and
    user decisions are re-applied verbatim (no reviewer or LLM is invoked).
    Any divergence from the recorded results raises, naming the first
    divergent seq. Returns the reproduced MappingSpec.
    """
    from .agent.session import rebuild_session  # deferred: agent depends on this module

    spec_artifacts = [
        r for r in log.records
        if r.kind == "artifact" and isinstance(r.payload, dict) and r.payload.get("kind") == "mapping_spec"
    ]
    if not spec_artifacts:
        raise ProvenanceError("incomplete log: no mapping-spec artifact record")

    session = rebuild_session(log.records, base_dir=base_dir, verify=True)
    if session.state.spec is None:
        raise ProvenanceError("incomplete log: no spec was built")
    return session.state.spec


def trace_value(log: ProvenanceLog, target_attribute: str, target_value: str) -> list[ProvenanceRecord]:
    """Causally ordered records that produced one (attribute, value) mapping."""

    def subject_matches(payload: dict) -> bool:
        subject = payload.get("subject", {})
        if subject.get("kind") != "value":
            return False
        if payload.get("attribute") != target_attribute:
            return False
        return target_value in (payload.get("target"), payload.get("corrected_from"))

    relevant: dict[int, ProvenanceRecord] = {}
    for record in log.records:
        payload = record.payload if isinstance(record.payload, dict) else {}
        if record.kind == "tool_result" and payload.get("tool") == "match_values":
            for table in payload.get("result", []):
                if table.get("target_attribute") != target_attribute:
                    continue
                if any(m.get("target") == target_value for m in table.get("matches", [])):
                    relevant[record.seq] = record
        elif record.kind in ("reviewer_decision", "user_decision") and subject_matches(payload):
            relevant[record.seq] = record
        elif record.kind == "artifact" and payload.get("kind") == "mapping_spec":
            from .mapspec import Dictionary, parse_spec

            try:
                spec = parse_spec(payload.get("content", ""))
            except SpecError:
                continue
            for entry in spec.entries:
                if (
                    entry.target == target_attribute
                    and isinstance(entry.transform, Dictionary)
                    and any(v == target_value for _, v in entry.transform.matches)
                ):
                    relevant[record.seq] = record

    # pull in causal ancestors
    by_seq = {r.seq: r for r in log.records}
    frontier = list(relevant.values())
    while frontier:
        record = frontier.pop()
        parent = record.parent_seq
        if parent is not None and parent not in relevant:
            relevant[parent] = by_seq[parent]
            frontier.append(by_seq[parent])
    return [relevant[seq] for seq in sorted(relevant)]
