"""Metric harness for schema-matching and value-mapping predictions.

Items are source columns (schema task) or (column, source value) pairs
(value task). A null target means abstention. Conventions, fixed here
because they matter for comparability:

- precision = correct / predicted, and 1.0 when nothing was predicted and
  the truth is empty;
- recall = correct / truth, and 1.0 when the truth is empty;
- f1 = 2PR/(P+R), 0 when P+R = 0;
- accuracy = correct decisions / items over the union of truth and
  predicted items, where abstaining on an item absent from the truth
  counts as a correct decision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import EvalError

TASKS = ("schema_matching", "value_mapping")


@dataclass(frozen=True)
class EvalReport:
    task: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    num_predicted: int
    num_correct: int
    num_truth: int
    num_items: int

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {
                "num_predicted": self.num_predicted,
                "num_correct": self.num_correct,
                "num_truth": self.num_truth,
                "num_items": self.num_items,
            },
        }


def _schema_items(doc: object, label: str) -> dict[str, str | None]:
    """Normalize a schema-task mapping: {column: target} or a match-result array."""
    if isinstance(doc, dict):
        out = {}
        for column, target in doc.items():
            if target is not None and not isinstance(target, str):
                raise EvalError(f"{label}: target for {column!r} must be a string or null")
            out[column] = target
        return out
    if isinstance(doc, list):
        out = {}
        for entry in doc:
            if not isinstance(entry, dict) or "source" not in entry:
                raise EvalError(f"{label}: match entries need a source key")
            out[entry["source"]] = entry.get("target")
        return out
    raise EvalError(f"{label}: expected an object or a match array")


def _value_items(doc: object, label: str) -> dict[tuple[str, str], str | None]:
    """Normalize a value-task mapping: {column: {value: target}} or value-table array."""
    out: dict[tuple[str, str], str | None] = {}
    if isinstance(doc, dict):
        for column, values in doc.items():
            if not isinstance(values, dict):
                raise EvalError(f"{label}: column {column!r} must map to an object of values")
            for value, target in values.items():
                out[(column, value)] = target
        return out
    if isinstance(doc, list):
        for table in doc:
            if not isinstance(table, dict) or "source_column" not in table:
                raise EvalError(f"{label}: value tables need a source_column key")
            for entry in table.get("matches", []):
                out[(table["source_column"], entry["source"])] = entry.get("target")
        return out
    raise EvalError(f"{label}: expected an object or a value-table array")


def evaluate(pred: object, truth: object, task: str) -> EvalReport:
    """Compare predictions against a truth mapping for one task."""
    if task not in TASKS:
        raise EvalError(f"unknown task {task!r}; expected one of {TASKS}")
    if task == "schema_matching":
        pred_map, truth_map = _schema_items(pred, "pred"), _schema_items(truth, "truth")
    else:
        pred_map, truth_map = _value_items(pred, "pred"), _value_items(truth, "truth")

    items = sorted(set(pred_map) | set(truth_map), key=repr)
    predictions = {k: v for k, v in pred_map.items() if v is not None}
    truths = {k: v for k, v in truth_map.items() if v is not None}

    correct_predictions = sum(1 for k, v in predictions.items() if truths.get(k) == v)
    correct_decisions = sum(1 for k in items if predictions.get(k) == truths.get(k))

    num_predicted, num_truth, num_items = len(predictions), len(truths), len(items)
    if num_predicted > 0:
        precision = correct_predictions / num_predicted
    else:
        precision = 1.0 if num_truth == 0 else 0.0
    recall = correct_predictions / num_truth if num_truth > 0 else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    accuracy = correct_decisions / num_items if num_items > 0 else 1.0
    return EvalReport(
        task=task,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        num_predicted=num_predicted,
        num_correct=correct_predictions,
        num_truth=num_truth,
        num_items=num_items,
    )


def load_mapping_file(path: str | Path) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise EvalError(f"{path}: not valid JSON ({exc})") from None


def render_report(report: EvalReport) -> str:
    """Aligned text table for terminal output."""
    rows = [
        ("task", report.task),
        ("accuracy", f"{report.accuracy:.4f}"),
        ("precision", f"{report.precision:.4f}"),
        ("recall", f"{report.recall:.4f}"),
        ("f1", f"{report.f1:.4f}"),
        ("predicted", str(report.num_predicted)),
        ("correct", str(report.num_correct)),
        ("truth", str(report.num_truth)),
        ("items", str(report.num_items)),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)
