"""Pydantic request/response models for the session API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    vocabulary_path: str | None = None
    vocabulary: dict | None = None
    method: str = "tfidf_ngram"
    max_steps: int = 64
    task: str = ""


class SessionInfo(BaseModel):
    session_id: str
    phase: str
    tables: list[str]
    pending_questions: int
    artifacts: list[str]


class UploadTableRequest(BaseModel):
    name: str | None = None
    csv_text: str | None = None
    path: str | None = None
    columns: list[str] | None = None


class MatchSchemaRequest(BaseModel):
    table: str | None = None
    method: str | None = None


class SubjectBody(BaseModel):
    kind: str  # column | value | conflict
    column: str | None = None
    value: str | None = None
    target: str | None = None
    columns: list[str] | None = None


class DecisionRequest(BaseModel):
    subject: SubjectBody
    verdict: str  # keep | replace
    target: str | None = None
    rationale: str = ""


class MatchValuesRequest(BaseModel):
    pairs: list[list[str]] | None = None
    source_columns: list[str] | None = None
    table: str | None = None
    method: str | None = None


class AnswerRequest(BaseModel):
    question_id: str
    answer: str


class MaterializeRequest(BaseModel):
    table: str | None = None
    output: str | None = None


class MaterializeResponse(BaseModel):
    table: str
    rows: int
    columns: list[str]
    artifacts: list[str]


class ErrorBody(BaseModel):
    error: str
    detail: str = Field(default="")
