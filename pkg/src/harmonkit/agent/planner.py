"""Planners decide the next agent action from the session state."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from ..errors import AgentLoopError
from .session import SessionState


@dataclass(frozen=True)
class ToolCall:
    tool: str
    args: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AskUser:
    question: str
    options: list[str] = field(default_factory=list)
    regarding: dict | None = None


@dataclass(frozen=True)
class Finish:
    summary: str = ""


AgentAction = ToolCall | AskUser | Finish


class Planner(Protocol):
    def next_action(self, state: SessionState) -> AgentAction: ...


_PLAYBOOK_KEYS = {
    "task", "table", "name", "columns", "vocabulary", "method",
    "value_columns", "spec_out", "table_out", "max_steps",
}


def load_playbook(path: str | Path) -> dict:
    """Read and validate a playbook file for the scripted planner."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AgentLoopError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise AgentLoopError(f"{path}: playbook must be a JSON object")
    unknown = set(doc) - _PLAYBOOK_KEYS
    if unknown:
        raise AgentLoopError(f"{path}: unknown playbook keys {sorted(unknown)}")
    for required in ("table", "vocabulary"):
        if required not in doc:
            raise AgentLoopError(f"{path}: playbook requires {required!r}")
    return doc


class ScriptedPlanner:
    """Fixed harmonization playbook.

    Sequence: load the table, match the schema, review the column matches,
    match values for the requested columns, review them, build and validate
    the spec, materialize, write the output, finish.
    """

    def __init__(self, playbook: dict):
        self.playbook = playbook

    def next_action(self, state: SessionState) -> AgentAction:
        pb = self.playbook
        table_name = pb.get("name") or Path(pb["table"]).stem
        out_table = f"{table_name}_harmonized"
        if not state.tables:
            args = {"path": pb["table"], "name": table_name}
            if pb.get("columns"):
                args["columns"] = list(pb["columns"])
            return ToolCall("load_table", args)
        if not state.column_matches:
            return ToolCall("match_schema", {"source": table_name})
        if not state.columns_reviewed:
            return ToolCall("review_column_matches")
        if not state.value_tables:
            args = {"source": table_name}
            if pb.get("value_columns"):
                args["source_columns"] = list(pb["value_columns"])
            return ToolCall("match_values", args)
        if not state.values_reviewed:
            return ToolCall("review_value_matches")
        if state.spec is None:
            args = {"table": table_name}
            if pb.get("spec_out"):
                args["output"] = pb["spec_out"]
            return ToolCall("build_spec", args)
        if out_table not in state.tables:
            return ToolCall("materialize_mapping", {"table": table_name, "output": out_table})
        csv_name = pb.get("table_out") or f"{out_table}.csv"
        if csv_name not in state.artifacts:
            return ToolCall("write_table", {"table": out_table, "path": csv_name})
        return Finish(summary=f"harmonized {table_name} into {csv_name}")


class RestlessPlanner:
    """Never finishes; used to exercise the step budget."""

    def __init__(self, attribute: str):
        self.attribute = attribute

    def next_action(self, state: SessionState) -> AgentAction:
        return ToolCall("domain_of", {"attribute": self.attribute})
