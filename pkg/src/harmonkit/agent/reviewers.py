"""Reviewers judge matcher outputs and propose corrections or escalations.

Two implementations: a deterministic mock driven by a corrections table and
a score threshold, and a remote client speaking the OpenAI-compatible
chat-completions wire format with function calls.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from ..errors import ReviewerError
from ..matchers import ColumnMatch, ValueMatch

ENV_URL = "HARMONKIT_LLM_URL"
ENV_MODEL = "HARMONKIT_LLM_MODEL"
ENV_KEY = "HARMONKIT_LLM_KEY"


@dataclass(frozen=True)
class ReviewDecision:
    verdict: str  # keep | replace | escalate
    target: str | None = None
    question: str | None = None
    rationale: str = ""

    def __post_init__(self):
        if self.verdict not in ("keep", "replace", "escalate"):
            raise ReviewerError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "replace" and not self.target:
            raise ReviewerError("replace decision requires a target")


class Reviewer(Protocol):
    def review_column(self, match: ColumnMatch, attributes: list[str]) -> ReviewDecision: ...

    def review_value(
        self, column: str, attribute: str, match: ValueMatch, domain: list[str]
    ) -> ReviewDecision: ...


class MockReviewer:
    """Corrections table first, then a score threshold, else escalate."""

    def __init__(
        self,
        threshold: float = 0.5,
        column_corrections: dict[str, str] | None = None,
        value_corrections: dict[str, dict[str, str]] | None = None,
    ):
        self.threshold = threshold
        self.column_corrections = dict(column_corrections or {})
        self.value_corrections = {k: dict(v) for k, v in (value_corrections or {}).items()}

    @classmethod
    def from_file(cls, path: str | Path) -> MockReviewer:
        """Load a corrections fixture: {"columns": {...}, "values": {...}, "threshold": n}."""
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ReviewerError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ReviewerError(f"{path}: corrections file must be a JSON object")
        unknown = set(doc) - {"columns", "values", "threshold"}
        if unknown:
            raise ReviewerError(f"{path}: unknown keys {sorted(unknown)}")
        return cls(
            threshold=doc.get("threshold", 0.5),
            column_corrections=doc.get("columns", {}),
            value_corrections=doc.get("values", {}),
        )

    def review_column(self, match: ColumnMatch, attributes: list[str]) -> ReviewDecision:
        wanted = self.column_corrections.get(match.source_column)
        if wanted is not None and wanted != match.target_attribute:
            return ReviewDecision(
                verdict="replace",
                target=wanted,
                rationale=f"corrections table maps {match.source_column!r} to {wanted!r}",
            )
        if match.score >= self.threshold:
            return ReviewDecision(verdict="keep", rationale=f"score {match.score:.3f} >= threshold")
        return ReviewDecision(
            verdict="escalate",
            question=f"Low-confidence match for column {match.source_column!r}: "
            f"{match.target_attribute!r} (score {match.score:.3f}). Pick a target.",
            rationale=f"score {match.score:.3f} below threshold {self.threshold}",
        )

    def review_value(
        self, column: str, attribute: str, match: ValueMatch, domain: list[str]
    ) -> ReviewDecision:
        wanted = self.value_corrections.get(column, {}).get(match.source_value)
        if wanted is not None and wanted != match.target_value:
            return ReviewDecision(
                verdict="replace",
                target=wanted,
                rationale=f"corrections table maps {match.source_value!r} to {wanted!r}",
            )
        if match.score >= self.threshold:
            return ReviewDecision(verdict="keep", rationale=f"score {match.score:.3f} >= threshold")
        return ReviewDecision(
            verdict="escalate",
            question=f"Low-confidence mapping of value {match.source_value!r} in column {column!r}: "
            f"{match.target_value!r} (score {match.score:.3f}). Pick a permissible value.",
            rationale=f"score {match.score:.3f} below threshold {self.threshold}",
        )


_REVIEW_TOOLS = [
    {
        "type": "function",
        "function": {
            "name": "keep",
            "description": "Accept the proposed match as correct.",
            "parameters": {
                "type": "object",
                "properties": {"rationale": {"type": "string"}},
                "required": [],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "replace",
            "description": "Replace the proposed target with a better one from the candidates.",
            "parameters": {
                "type": "object",
                "properties": {"target": {"type": "string"}, "rationale": {"type": "string"}},
                "required": ["target"],
            },
        },
    },
    {
        "type": "function",
        "function": {
            "name": "escalate",
            "description": "Ask the user to decide; use when no candidate is clearly right.",
            "parameters": {
                "type": "object",
                "properties": {"question": {"type": "string"}, "rationale": {"type": "string"}},
                "required": ["question"],
            },
        },
    },
]

_SYSTEM_PROMPT = (
    "You review data-harmonization matches. For each match, decide whether the "
    "proposed target is correct. Respond with exactly one tool call: keep, "
    "replace (with a target chosen from the candidates), or escalate."
)


class RemoteReviewer:
    """Reviewer backed by an OpenAI-compatible chat-completions endpoint."""

    def __init__(
        self,
        url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        timeout: float = 30.0,
    ):
        self.url = url or os.environ.get(ENV_URL)
        self.model = model or os.environ.get(ENV_MODEL)
        self.api_key = api_key or os.environ.get(ENV_KEY, "")
        if not self.url or not self.model:
            raise ReviewerError(
                f"remote reviewer needs an endpoint and model ({ENV_URL}, {ENV_MODEL})"
            )
        self._client = client or httpx.Client(timeout=timeout)

    def _complete(self, user_content: str) -> ReviewDecision:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": _SYSTEM_PROMPT},
                {"role": "user", "content": user_content},
            ],
            "tools": _REVIEW_TOOLS,
            "tool_choice": "required",
            "temperature": 0,
        }
        try:
            response = self._client.post(
                self.url.rstrip("/") + "/chat/completions", json=body, headers=headers
            )
        except httpx.HTTPError as exc:
            raise ReviewerError(f"reviewer endpoint unreachable: {exc}") from None
        if response.status_code != 200:
            raise ReviewerError(f"reviewer endpoint returned {response.status_code}")
        try:
            message = response.json()["choices"][0]["message"]
            call = message["tool_calls"][0]["function"]
            name = call["name"]
            args = json.loads(call.get("arguments") or "{}")
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise ReviewerError(f"reviewer response malformed: {exc}") from None
        if name == "keep":
            return ReviewDecision(verdict="keep", rationale=args.get("rationale", ""))
        if name == "replace":
            if not isinstance(args.get("target"), str):
                raise ReviewerError("replace call missing target")
            return ReviewDecision(
                verdict="replace", target=args["target"], rationale=args.get("rationale", "")
            )
        if name == "escalate":
            return ReviewDecision(
                verdict="escalate",
                question=args.get("question", "Please review this match."),
                rationale=args.get("rationale", ""),
            )
        raise ReviewerError(f"reviewer called unknown tool {name!r}")

    def review_column(self, match: ColumnMatch, attributes: list[str]) -> ReviewDecision:
        content = json.dumps(
            {
                "task": "column_match_review",
                "source_column": match.source_column,
                "proposed_target": match.target_attribute,
                "score": match.score,
                "candidates": attributes,
            },
            ensure_ascii=False,
        )
        return self._complete(content)

    def review_value(
        self, column: str, attribute: str, match: ValueMatch, domain: list[str]
    ) -> ReviewDecision:
        content = json.dumps(
            {
                "task": "value_match_review",
                "source_column": column,
                "target_attribute": attribute,
                "source_value": match.source_value,
                "proposed_value": match.target_value,
                "score": match.score,
                "permissible_values": domain,
            },
            ensure_ascii=False,
        )
        return self._complete(content)
