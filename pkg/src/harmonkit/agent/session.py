"""Harmonization session: shared state, journaled operations, and rebuild.

Every operation is journaled write-ahead into the session's provenance log
as tool_call/tool_result pairs (plus decision, question, and artifact
records), which makes sessions replayable and restorable from the log alone.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .. import mapspec as mapspec_mod
from .. import matchers as matchers_mod
from .. import materialize as materialize_mod
from ..errors import (
    HarmonkitError,
    ProvenanceError,
    QuestionClosedError,
    ReplayDivergenceError,
    ReviewerError,
    SessionError,
    UnknownQuestionError,
    WrongPhaseError,
)
from ..mapspec import MappingSpec, serialize_spec
from ..matchers import (
    ColumnMatch,
    MatchMethod,
    ValueMatchTable,
    column_matches_to_json,
    correct_column_match,
    correct_value_match,
    value_table_to_json,
)
from ..provenance import ProvenanceLog, ProvenanceRecord, file_sha256, text_sha256
from ..tablecore import Table, TargetSchema, parse_vocabulary, table_from_csv_text, table_to_csv, vocabulary_to_json
from .registry import build_default_registry
from .reviewers import ReviewDecision, Reviewer

REVIEW_TOOLS = ("review_column_matches", "review_value_matches")


@dataclass
class Question:
    question_id: str
    text: str
    options: list[str]
    regarding: dict | None = None
    status: str = "open"  # open | closed
    answer: str | None = None


@dataclass
class SessionState:
    session_id: str
    schema: TargetSchema | None = None
    tables: dict[str, Table] = field(default_factory=dict)
    column_matches: list[ColumnMatch] = field(default_factory=list)
    value_tables: list[ValueMatchTable] = field(default_factory=list)
    questions: list[Question] = field(default_factory=list)
    spec: MappingSpec | None = None
    diagnostics: list = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)  # name -> sha256
    phase: str = "created"
    method: str = "tfidf_ngram"
    step_count: int = 0
    max_steps: int = 64
    columns_reviewed: bool = False
    values_reviewed: bool = False

    def pending_questions(self) -> list[Question]:
        return [q for q in self.questions if q.status == "open"]

    def find_question(self, question_id: str) -> Question:
        for q in self.questions:
            if q.question_id == question_id:
                return q
        raise UnknownQuestionError(f"unknown question {question_id!r}")

    def find_column_match(self, column: str) -> ColumnMatch:
        for m in self.column_matches:
            if m.source_column == column:
                return m
        raise SessionError(f"no match for column {column!r}")

    def find_value_table(self, column: str) -> ValueMatchTable:
        for t in self.value_tables:
            if t.source_column == column:
                return t
        raise SessionError(f"no value matches for column {column!r}")


class HarmonizationSession:
    """One harmonization task: tables, matches, decisions, spec, artifacts."""

    def __init__(
        self,
        state: SessionState,
        log: ProvenanceLog,
        artifact_dir: str | Path | None = None,
        base_dir: str | Path | None = None,
    ):
        self.state = state
        self.log = log
        self.artifact_dir = Path(artifact_dir) if artifact_dir is not None else None
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.registry = build_default_registry()
        self._journal = True
        self._call_stack: list[int] = []
        self._call_counter = 0
        self._question_counter = 0

    @classmethod
    def create(
        cls,
        session_id: str,
        schema: TargetSchema,
        *,
        log_path: str | Path | None = None,
        artifact_dir: str | Path | None = None,
        base_dir: str | Path | None = None,
        method: str = "tfidf_ngram",
        max_steps: int = 64,
        task: str = "",
        inputs: dict[str, str] | None = None,
    ) -> HarmonizationSession:
        MatchMethod.parse(method)  # validate early
        if artifact_dir is not None:
            Path(artifact_dir).mkdir(parents=True, exist_ok=True)
        if log_path is not None:
            Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log = ProvenanceLog(session_id, path=log_path)
        state = SessionState(session_id=session_id, schema=schema, method=method, max_steps=max_steps)
        session = cls(state, log, artifact_dir=artifact_dir, base_dir=base_dir)
        log.add(
            "user_prompt",
            {
                "event": "session_start",
                "task": task,
                "inputs": inputs or {},
                "vocabulary": vocabulary_to_json(schema),
                "options": {"method": method, "max_steps": max_steps},
            },
        )
        return session

    # -- journaling helpers --

    def _next_call_id(self) -> str:
        self._call_counter += 1
        return f"call-{self._call_counter:04d}"

    def _next_question_id(self) -> str:
        self._question_counter += 1
        return f"q-{self._question_counter:04d}"

    def _parent_seq(self) -> int | None:
        return self._call_stack[-1] if self._call_stack else None

    def _record(self, kind: str, payload: object, parent_seq: int | None = None) -> int | None:
        if not self._journal:
            return None
        record = self.log.add(kind, payload, parent_seq=parent_seq)
        return record.seq

    @contextmanager
    def _tool_call(self, tool: str, args: dict):
        ctx = _CallContext()
        if self._journal:
            call_id = self._next_call_id()
            seq = self._record(
                "tool_call",
                {"call_id": call_id, "tool": tool, "args": args},
                parent_seq=self._parent_seq(),
            )
            self._call_stack.append(seq)
            try:
                yield ctx
            except HarmonkitError as exc:
                self._call_stack.pop()
                self._record(
                    "tool_result",
                    {"call_id": call_id, "tool": tool, "ok": False, "error": str(exc)},
                    parent_seq=seq,
                )
                raise
            else:
                self._call_stack.pop()
                self._record(
                    "tool_result",
                    {"call_id": call_id, "tool": tool, "ok": True, "result": ctx.result},
                    parent_seq=seq,
                )
        else:
            yield ctx

    def _write_artifact(self, name: str, data: bytes, kind: str, extra: dict | None = None) -> str:
        if "/" in name or "\\" in name or name.startswith("."):
            raise SessionError(f"artifact name {name!r} must be a bare file name")
        digest = hashlib.sha256(data).hexdigest()
        if self._journal:
            if self.artifact_dir is None:
                raise SessionError("session has no artifact directory")
            payload = {"name": name, "kind": kind, "sha256": digest}
            payload.update(extra or {})
            self._record("artifact", payload, parent_seq=self._parent_seq())
            (self.artifact_dir / name).write_bytes(data)
        self.state.artifacts[name] = digest
        return digest

    def artifact_path(self, name: str) -> Path:
        if name not in self.state.artifacts or self.artifact_dir is None:
            raise SessionError(f"unknown artifact {name!r}")
        return self.artifact_dir / name

    # -- table helpers --

    def _resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def _get_table(self, name: str | None) -> Table:
        if not self.state.tables:
            raise SessionError("no tables loaded")
        if name is None:
            return next(iter(self.state.tables.values()))
        if name not in self.state.tables:
            raise SessionError(f"unknown table {name!r}")
        return self.state.tables[name]

    def _method(self, method: str | None) -> MatchMethod:
        return MatchMethod.parse(method or self.state.method)

    # -- operations --

    def load_table(self, path=None, csv_text=None, name=None, columns=None):
        args = {k: v for k, v in (("path", path), ("csv_text", csv_text), ("name", name), ("columns", columns)) if v is not None}
        with self._tool_call("load_table", args) as ctx:
            if self.state.phase not in ("created", "tables_loaded"):
                raise WrongPhaseError(f"cannot load tables in phase {self.state.phase!r}")
            if (path is None) == (csv_text is None):
                raise SessionError("load_table needs exactly one of path or csv_text")
            if path is not None:
                resolved = self._resolve(path)
                if not resolved.is_file():
                    raise SessionError(f"file not found: {path}")
                digest = file_sha256(resolved)
                text = resolved.read_text(encoding="utf-8")
                table_name = name or resolved.stem
            else:
                text = csv_text
                digest = text_sha256(csv_text)
                if not name:
                    raise SessionError("inline CSV requires a table name")
                table_name = name
            table = table_from_csv_text(table_name, text, columns=columns)
            self.state.tables[table_name] = table
            self.state.phase = "tables_loaded"
            ctx.result = {
                "table": table_name,
                "columns": table.columns,
                "rows": len(table.rows),
                "sha256": digest,
            }
            return ctx.result

    def match_schema(self, source=None, target=None, method=None):
        args = {k: v for k, v in (("source", source), ("target", target), ("method", method)) if v}
        with self._tool_call("match_schema", args) as ctx:
            if self.state.phase == "created":
                raise WrongPhaseError("load a table before matching the schema")
            if target is not None and target != self.state.schema.name:
                raise SessionError(
                    f"unknown target schema {target!r}; this session harmonizes against {self.state.schema.name!r}"
                )
            source_table = self._get_table(source)
            matches = matchers_mod.match_schema(source_table, self.state.schema, self._method(method))
            self.state.column_matches = matches
            self.state.value_tables = []
            self.state.spec = None
            self.state.diagnostics = []
            self.state.columns_reviewed = False
            self.state.values_reviewed = False
            self.state.questions = [q for q in self.state.questions if q.status == "closed"]
            self.state.phase = "schema_matched"
            ctx.result = column_matches_to_json(matches)
            return ctx.result

    def top_matches(self, column, k, source=None, method=None):
        with self._tool_call("top_matches", {"column": column, "k": k}) as ctx:
            source_table = self._get_table(source)
            ranked = matchers_mod.top_matches(source_table, column, self.state.schema, k, self._method(method))
            ctx.result = [[name, score] for name, score in ranked]
            return ctx.result

    def domain_of(self, attribute):
        with self._tool_call("domain_of", {"attribute": attribute}) as ctx:
            attr = self.state.schema.attribute(attribute)
            ctx.result = {
                "attribute": attribute,
                "kind": attr.domain.kind,
                "values": list(attr.domain.values),
            }
            return ctx.result

    def match_values(self, source_columns=None, pairs=None, source=None, method=None):
        args: dict = {}
        if source_columns is not None:
            args["source_columns"] = source_columns
        if pairs is not None:
            args["pairs"] = pairs
        with self._tool_call("match_values", args) as ctx:
            if not self.state.column_matches and pairs is None:
                raise SessionError("match the schema before matching values")
            source_table = self._get_table(source)
            if pairs is not None:
                resolved_pairs = [(p[0], p[1]) for p in pairs]
            else:
                columns = source_columns or [
                    m.source_column for m in self.state.column_matches if m.target_attribute
                ]
                resolved_pairs = []
                for column in columns:
                    match = self.state.find_column_match(column)
                    if match.target_attribute is None:
                        raise SessionError(f"column {column!r} has no matched target attribute")
                    resolved_pairs.append((column, match.target_attribute))
            method_obj = self._method(method)
            tables = matchers_mod.match_values(source_table, self.state.schema, resolved_pairs, method_obj)
            self.state.value_tables = tables
            self.state.values_reviewed = False
            if self.state.phase in ("schema_matched", "values_matched"):
                self.state.phase = "values_matched"
            ctx.result = [value_table_to_json(t, str(method_obj)) for t in tables]
            return ctx.result

    def build_spec(self, table=None, output=None):
        with self._tool_call("build_spec", {k: v for k, v in (("table", table), ("output", output)) if v}) as ctx:
            if not self.state.column_matches:
                raise SessionError("match the schema before building a spec")
            source = self._get_table(table)
            spec = mapspec_mod.build_spec(self.state.column_matches, self.state.value_tables)
            diagnostics = mapspec_mod.validate_spec(spec, source, self.state.schema)
            self.state.spec = spec
            self.state.diagnostics = diagnostics
            content = serialize_spec(spec)
            name = output or f"{source.name}.mapping.json"
            digest = self._write_artifact(name, content.encode("utf-8"), "mapping_spec", {"content": content})
            self.state.phase = "spec_built"
            ctx.result = {
                "entries": len(spec.entries),
                "artifact": name,
                "sha256": digest,
                "diagnostics": [
                    {"severity": d.severity, "entry": d.entry, "message": d.message} for d in diagnostics
                ],
            }
            return ctx.result

    def validate_spec(self, table=None):
        with self._tool_call("validate_spec", {}) as ctx:
            if self.state.spec is None:
                raise SessionError("no spec to validate; run build_spec first")
            source = self._get_table(table)
            diagnostics = mapspec_mod.validate_spec(self.state.spec, source, self.state.schema)
            self.state.diagnostics = diagnostics
            ctx.result = [
                {"severity": d.severity, "entry": d.entry, "message": d.message} for d in diagnostics
            ]
            return ctx.result

    def materialize_mapping(self, table=None, output=None):
        with self._tool_call("materialize_mapping", {k: v for k, v in (("table", table), ("output", output)) if v}) as ctx:
            if self.state.spec is None:
                raise SessionError("no spec to materialize; run build_spec first")
            errors = [d for d in self.state.diagnostics if d.severity == "error"]
            if errors:
                raise SessionError(
                    "spec has error diagnostics: " + "; ".join(d.message for d in errors)
                )
            source = self._get_table(table)
            result = materialize_mod.materialize_mapping(source, self.state.spec)
            out_name = output or result.name
            result = Table(name=out_name, columns=result.columns, rows=result.rows)
            self.state.tables[out_name] = result
            self.state.phase = "materialized"
            ctx.result = {
                "table": out_name,
                "columns": result.columns,
                "rows": len(result.rows),
                "sha256": text_sha256(table_to_csv(result)),
            }
            return ctx.result

    def union_tables(self, tables, output):
        with self._tool_call("union_tables", {"tables": tables, "output": output}) as ctx:
            parts = [self._get_table(name) for name in tables]
            result = materialize_mod.union_tables(parts, name=output)
            self.state.tables[output] = result
            ctx.result = {"table": output, "columns": result.columns, "rows": len(result.rows)}
            return ctx.result

    def write_table(self, table, path):
        with self._tool_call("write_table", {"table": table, "path": path}) as ctx:
            source = self._get_table(table)
            data = table_to_csv(source).encode("utf-8")
            digest = self._write_artifact(path, data, "table", {"table": table})
            ctx.result = {"path": path, "table": table, "sha256": digest}
            return ctx.result

    # -- review and decisions --

    def _subject_column(self, column: str) -> dict:
        return {"kind": "column", "column": column}

    def _subject_value(self, column: str, value: str) -> dict:
        return {"kind": "value", "column": column, "value": value}

    def _ask(self, text: str, options: list[str], regarding: dict | None, parent_seq: int | None = None) -> Question:
        question = Question(self._next_question_id(), text, list(options), regarding)
        self.state.questions.append(question)
        self._record(
            "question",
            {
                "question_id": question.question_id,
                "text": text,
                "options": list(options),
                "regarding": regarding,
            },
            parent_seq=parent_seq if parent_seq is not None else self._parent_seq(),
        )
        return question

    def ask_user(self, text: str, options: list[str] | None = None, regarding: dict | None = None) -> Question:
        """Enqueue a question from the planner itself."""
        return self._ask(text, options or [], regarding)

    def peek_alternatives(self, column: str, k: int = 10, table: str | None = None) -> list[tuple[str, float]]:
        """Read-only alternatives lookup; unlike the top_matches tool it is not journaled."""
        source = self._get_table(table)
        return matchers_mod.top_matches(
            source, column, self.state.schema, k, self._method(None)
        )

    def review_column_matches(self, reviewer: Reviewer):
        with self._tool_call("review_column_matches", {}) as ctx:
            if not self.state.column_matches:
                raise SessionError("no column matches to review")
            attributes = self.state.schema.attribute_names()
            decisions = self._collect(
                [(m, lambda m=m: reviewer.review_column(m, attributes)) for m in self.state.column_matches],
                failure_question=lambda m: f"Reviewer unavailable; confirm the match for column {m.source_column!r}.",
            )
            kept = replaced = escalated = 0
            for match, decision in decisions:
                subject = self._subject_column(match.source_column)
                if decision.verdict == "replace" and decision.target not in attributes:
                    decision = ReviewDecision(
                        verdict="escalate",
                        question=f"Proposed target {decision.target!r} for column "
                        f"{match.source_column!r} is not in the schema. Pick a target.",
                        rationale=f"rejected replacement {decision.target!r}: not a schema attribute",
                    )
                candidates = None
                if decision.verdict in ("replace", "escalate"):
                    k = min(10, len(attributes))
                    candidates = self.top_matches(match.source_column, k)
                payload = {
                    "subject": subject,
                    "verdict": decision.verdict,
                    "rationale": decision.rationale,
                }
                if candidates is not None:
                    payload["candidates"] = candidates
                if decision.verdict == "keep":
                    payload["target"] = match.target_attribute
                    kept += 1
                elif decision.verdict == "replace":
                    payload["target"] = decision.target
                    payload["corrected_from"] = match.target_attribute
                    replaced += 1
                else:
                    escalated += 1
                seq = self._record("reviewer_decision", payload, parent_seq=self._parent_seq())
                if decision.verdict == "replace":
                    self._apply_column_target(match.source_column, decision.target)
                elif decision.verdict == "escalate":
                    options = [name for name, _ in (candidates or [])]
                    self._ask(decision.question or "Pick a target.", options, subject, parent_seq=seq)
            self._escalate_target_conflicts()
            self.state.columns_reviewed = True
            ctx.result = {"kept": kept, "replaced": replaced, "escalated": escalated}
            return ctx.result

    def review_value_matches(self, reviewer: Reviewer):
        with self._tool_call("review_value_matches", {}) as ctx:
            if not self.state.value_tables:
                raise SessionError("no value matches to review")
            items = []
            for vtable in self.state.value_tables:
                if vtable.skipped:
                    continue
                domain = self.state.schema.domain_of(vtable.target_attribute)
                for match in vtable.matches:
                    items.append((vtable, match, domain))
            decisions = self._collect(
                [
                    (
                        (vtable, match, domain),
                        lambda vtable=vtable, match=match, domain=domain: reviewer.review_value(
                            vtable.source_column, vtable.target_attribute, match, domain
                        ),
                    )
                    for vtable, match, domain in items
                ],
                failure_question=lambda item: f"Reviewer unavailable; confirm the mapping of value "
                f"{item[1].source_value!r} in column {item[0].source_column!r}.",
            )
            kept = replaced = escalated = 0
            for (vtable, match, domain), decision in decisions:
                subject = self._subject_value(vtable.source_column, match.source_value)
                if decision.verdict == "replace" and decision.target not in domain:
                    decision = ReviewDecision(
                        verdict="escalate",
                        question=f"Proposed value {decision.target!r} is outside the domain of "
                        f"{vtable.target_attribute!r}. Pick a permissible value.",
                        rationale=f"rejected replacement {decision.target!r}: outside domain",
                    )
                payload = {
                    "subject": subject,
                    "attribute": vtable.target_attribute,
                    "verdict": decision.verdict,
                    "rationale": decision.rationale,
                }
                if decision.verdict == "keep":
                    payload["target"] = match.target_value
                    kept += 1
                elif decision.verdict == "replace":
                    payload["target"] = decision.target
                    payload["corrected_from"] = match.target_value
                    replaced += 1
                else:
                    escalated += 1
                seq = self._record("reviewer_decision", payload, parent_seq=self._parent_seq())
                if decision.verdict == "replace":
                    self._apply_value_target(vtable.source_column, match.source_value, decision.target)
                elif decision.verdict == "escalate":
                    self._ask(decision.question or "Pick a permissible value.", list(domain), subject, parent_seq=seq)
            self.state.values_reviewed = True
            ctx.result = {"kept": kept, "replaced": replaced, "escalated": escalated}
            return ctx.result

    def _collect(self, jobs, failure_question):
        """Run reviewer calls up front so a failure never applies a partial review."""
        decisions = []
        for item, call in jobs:
            try:
                decisions.append((item, call()))
            except ReviewerError:
                return [
                    (item, ReviewDecision(verdict="escalate", question=failure_question(item),
                                          rationale="reviewer unavailable"))
                    for item, _ in jobs
                ]
        return decisions

    def _escalate_target_conflicts(self) -> None:
        by_target: dict[str, list[str]] = {}
        for match in self.state.column_matches:
            if match.target_attribute is not None:
                by_target.setdefault(match.target_attribute, []).append(match.source_column)
        for target, columns in by_target.items():
            if len(columns) > 1:
                subject = {"kind": "conflict", "target": target, "columns": columns}
                self._ask(
                    f"Columns {columns} all map to {target!r}; pick the column that keeps it "
                    "(the others will be dropped).",
                    columns,
                    subject,
                )

    def _apply_column_target(self, column: str, target: str | None) -> None:
        for i, match in enumerate(self.state.column_matches):
            if match.source_column == column:
                if target is None:
                    self.state.column_matches[i] = matchers_mod.ColumnMatch(
                        source_column=match.source_column,
                        target_attribute=None,
                        score=match.score,
                        method=match.method,
                        corrected=match.target_attribute is not None,
                        corrected_from=match.target_attribute,
                    )
                else:
                    self.state.column_matches[i] = correct_column_match(match, target)
                return
        raise SessionError(f"no match for column {column!r}")

    def _apply_value_target(self, column: str, value: str, target: str) -> None:
        vtable = self.state.find_value_table(column)
        for i, match in enumerate(vtable.matches):
            if match.source_value == value:
                vtable.matches[i] = correct_value_match(match, target)
                return
        raise SessionError(f"no value match for {value!r} in column {column!r}")

    def apply_decision(
        self,
        subject: dict,
        verdict: str,
        target: str | None = None,
        decided_by: str = "user",
        rationale: str = "",
        parent_seq: int | None = None,
    ) -> dict:
        """Apply a keep/replace decision to a match and journal it."""
        if verdict not in ("keep", "replace"):
            raise SessionError(f"unknown verdict {verdict!r}")
        kind = subject.get("kind")
        payload: dict = {"subject": subject, "verdict": verdict, "rationale": rationale}
        if kind == "column":
            match = self.state.find_column_match(subject["column"])
            if verdict == "replace":
                if target is None or target not in self.state.schema.attribute_names():
                    raise SessionError(f"replacement target {target!r} is not a schema attribute")
                payload["target"] = target
                payload["corrected_from"] = match.target_attribute
            else:
                payload["target"] = match.target_attribute
        elif kind == "value":
            vtable = self.state.find_value_table(subject["column"])
            vmatch = next((m for m in vtable.matches if m.source_value == subject.get("value")), None)
            if vmatch is None:
                raise SessionError(f"no value match for {subject.get('value')!r} in column {subject['column']!r}")
            payload["attribute"] = vtable.target_attribute
            if verdict == "replace":
                domain = self.state.schema.domain_of(vtable.target_attribute)
                if target is None or target not in domain:
                    raise SessionError(f"replacement {target!r} is outside the domain of {vtable.target_attribute!r}")
                payload["target"] = target
                payload["corrected_from"] = vmatch.target_value
            else:
                payload["target"] = vmatch.target_value
        elif kind == "conflict":
            return self._apply_conflict_decision(subject, target, decided_by, rationale, parent_seq)
        else:
            raise SessionError(f"unknown decision subject kind {kind!r}")

        record_kind = "user_decision" if decided_by == "user" else "reviewer_decision"
        self._record(record_kind, payload, parent_seq=parent_seq)
        if verdict == "replace":
            if kind == "column":
                self._apply_column_target(subject["column"], target)
            else:
                self._apply_value_target(subject["column"], subject["value"], target)
        return payload

    def _apply_conflict_decision(self, subject, winner, decided_by, rationale, parent_seq):
        columns = subject.get("columns", [])
        if winner not in columns:
            raise SessionError(f"answer {winner!r} is not one of the conflicting columns")
        payload = {"subject": subject, "verdict": "replace", "target": winner, "rationale": rationale}
        record_kind = "user_decision" if decided_by == "user" else "reviewer_decision"
        self._record(record_kind, payload, parent_seq=parent_seq)
        for column in columns:
            if column != winner:
                self._apply_column_target(column, None)
        return payload

    def answer_question(self, question_id: str, answer: str) -> dict:
        """Apply a user's answer to a pending question."""
        question = self.state.find_question(question_id)
        if question.status != "open":
            raise QuestionClosedError(f"question {question_id!r} is already closed")
        choice = None if question.regarding is None else self._resolve_answer(question, answer)
        seq = self._record("answer", {"question_id": question_id, "answer": answer})
        question.status = "closed"
        question.answer = answer
        if question.regarding is None:
            return {"question_id": question_id, "answer": answer}
        if choice == "keep":
            return self.apply_decision(
                question.regarding, "keep", decided_by="user",
                rationale=f"user answered {answer!r}", parent_seq=seq,
            )
        return self.apply_decision(
            question.regarding, "replace", target=choice, decided_by="user",
            rationale=f"user answered {answer!r}", parent_seq=seq,
        )

    def _resolve_answer(self, question: Question, answer: str) -> str:
        options = question.options
        if answer == "keep":
            return "keep"
        if answer == "yes" and options:
            return options[0]
        if answer in options:
            return answer
        if answer.isdigit() and 1 <= int(answer) <= len(options):
            return options[int(answer) - 1]
        raise SessionError(
            f"answer {answer!r} is not among the offered options {options} (or 'yes'/'keep')"
        )

    def finish(self, summary: str = "") -> None:
        """Terminal check: an approved spec exists and nothing is pending."""
        if self.state.spec is None:
            raise SessionError("cannot finish: no mapping spec was built")
        if any(d.severity == "error" for d in self.state.diagnostics):
            raise SessionError("cannot finish: spec has error diagnostics")
        pending = self.state.pending_questions()
        if pending:
            raise SessionError(
                f"cannot finish: {len(pending)} question(s) still pending"
            )

    def invoke_tool(self, name: str, args: dict, reviewer: Reviewer | None = None):
        return self.registry.invoke(self, name, args, reviewer=reviewer)


class _CallContext:
    result: object = None


# -- rebuild (restore + replay) --


def _canon(value) -> str:
    return json.dumps(value, sort_keys=True, ensure_ascii=False)


def rebuild_session(
    records: list[ProvenanceRecord],
    base_dir: str | Path | None = None,
    verify: bool = True,
    artifact_dir: str | Path | None = None,
    log: ProvenanceLog | None = None,
) -> HarmonizationSession:
    """Rebuild a session from its provenance records.

    Pure tool calls are re-executed (reviewer and user decisions are applied
    verbatim, never re-asked); with ``verify`` any difference between the
    recomputed and the recorded results raises ReplayDivergenceError.
    """
    if not records:
        raise ProvenanceError("empty provenance log")
    first = records[0]
    if first.kind != "user_prompt" or not isinstance(first.payload, dict) or first.payload.get("event") != "session_start":
        raise ProvenanceError("log does not start with a session_start record")

    schema = parse_vocabulary(first.payload["vocabulary"])
    options = first.payload.get("options", {})
    state = SessionState(
        session_id=first.session_id,
        schema=schema,
        method=options.get("method", "tfidf_ngram"),
        max_steps=options.get("max_steps", 64),
    )
    session = HarmonizationSession(
        state,
        log or ProvenanceLog(first.session_id),
        artifact_dir=artifact_dir,
        base_dir=base_dir,
    )
    session._journal = False

    for path_text, recorded_hash in (first.payload.get("inputs") or {}).items():
        resolved = session._resolve(path_text)
        if not resolved.is_file():
            raise ProvenanceError(f"recorded input {path_text!r} is missing")
        if file_sha256(resolved) != recorded_hash:
            raise ProvenanceError(f"fixture hash mismatch for input {path_text!r}")

    pending: dict[str, dict] = {}
    try:
        for record in records[1:]:
            payload = record.payload if isinstance(record.payload, dict) else {}
            if record.kind == "tool_call":
                tool = payload.get("tool")
                args = payload.get("args", {})
                entry: dict = {"tool": tool, "seq": record.seq}
                if tool in REVIEW_TOOLS:
                    entry["review"] = True
                else:
                    try:
                        entry["result"] = session.invoke_tool(tool, args)
                        entry["ok"] = True
                    except HarmonkitError as exc:
                        entry["ok"] = False
                        entry["error"] = str(exc)
                pending[payload.get("call_id")] = entry
            elif record.kind == "tool_result":
                entry = pending.pop(payload.get("call_id"), None)
                if entry is None:
                    raise ReplayDivergenceError(record.seq, "tool_result without a matching tool_call")
                if entry.get("review"):
                    if payload.get("ok"):
                        if entry["tool"] == "review_column_matches":
                            session.state.columns_reviewed = True
                        else:
                            session.state.values_reviewed = True
                    continue
                if verify:
                    if bool(payload.get("ok")) != bool(entry.get("ok")):
                        raise ReplayDivergenceError(
                            record.seq, f"tool {entry['tool']} ok={entry.get('ok')} differs from recorded"
                        )
                    if entry.get("ok") and _canon(payload.get("result")) != _canon(entry.get("result")):
                        raise ReplayDivergenceError(record.seq, f"tool {entry['tool']} result differs")
            elif record.kind in ("reviewer_decision", "user_decision"):
                _reapply_decision(session, record.seq, payload, verify)
            elif record.kind == "question":
                session.state.questions.append(
                    Question(
                        question_id=payload.get("question_id", ""),
                        text=payload.get("text", ""),
                        options=list(payload.get("options") or []),
                        regarding=payload.get("regarding"),
                    )
                )
            elif record.kind == "answer":
                question = session.state.find_question(payload.get("question_id", ""))
                question.status = "closed"
                question.answer = payload.get("answer")
            elif record.kind == "artifact":
                name = payload.get("name", "")
                session.state.artifacts[name] = payload.get("sha256", "")
                if verify and payload.get("kind") == "mapping_spec":
                    if session.state.spec is None:
                        raise ReplayDivergenceError(record.seq, "spec artifact before any spec was built")
                    if serialize_spec(session.state.spec) != payload.get("content"):
                        raise ReplayDivergenceError(record.seq, "rebuilt spec differs from the recorded artifact")
    finally:
        session._journal = True
        session._call_counter = sum(1 for r in records if r.kind == "tool_call")
        session._question_counter = sum(1 for r in records if r.kind == "question")
    return session


def _reapply_decision(session: HarmonizationSession, seq: int, payload: dict, verify: bool) -> None:
    subject = payload.get("subject") or {}
    verdict = payload.get("verdict")
    kind = subject.get("kind")
    if verdict == "escalate":
        return  # the question record that follows recreates the pending question
    try:
        if kind == "column":
            match = session.state.find_column_match(subject.get("column", ""))
            if verdict == "replace":
                if verify and match.target_attribute != payload.get("corrected_from"):
                    raise ReplayDivergenceError(
                        seq,
                        f"decision expects target {payload.get('corrected_from')!r} "
                        f"but rebuilt match has {match.target_attribute!r}",
                    )
                session._apply_column_target(subject["column"], payload.get("target"))
            elif verify and payload.get("target") != match.target_attribute:
                raise ReplayDivergenceError(seq, "keep decision disagrees with the rebuilt match")
        elif kind == "value":
            vtable = session.state.find_value_table(subject.get("column", ""))
            vmatch = next(
                (m for m in vtable.matches if m.source_value == subject.get("value")), None
            )
            if vmatch is None:
                raise ReplayDivergenceError(seq, f"no value match for {subject.get('value')!r}")
            if verdict == "replace":
                if verify and vmatch.target_value != payload.get("corrected_from"):
                    raise ReplayDivergenceError(
                        seq,
                        f"decision expects value {payload.get('corrected_from')!r} "
                        f"but rebuilt match has {vmatch.target_value!r}",
                    )
                session._apply_value_target(subject["column"], subject["value"], payload.get("target"))
            elif verify and payload.get("target") != vmatch.target_value:
                raise ReplayDivergenceError(seq, "keep decision disagrees with the rebuilt match")
        elif kind == "conflict":
            winner = payload.get("target")
            for column in subject.get("columns", []):
                if column != winner:
                    session._apply_column_target(column, None)
        else:
            raise ReplayDivergenceError(seq, f"unknown decision subject {kind!r}")
    except SessionError as exc:
        raise ReplayDivergenceError(seq, str(exc)) from None


def restore_session(
    log_path: str | Path,
    base_dir: str | Path | None = None,
    artifact_dir: str | Path | None = None,
) -> HarmonizationSession:
    """Restore a live session from its provenance file, continuing the same log."""
    log = ProvenanceLog.load(log_path)
    return rebuild_session(
        log.records, base_dir=base_dir, verify=True, artifact_dir=artifact_dir, log=log
    )
