"""FastAPI application exposing the session workflow over JSON."""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .. import matchers as matchers_mod
from ..config import ServiceConfig
from ..errors import (
    HarmonkitError,
    NotFoundError,
    QuestionClosedError,
    SessionError,
    WrongPhaseError,
)
from ..matchers import MatchMethod
from ..tablecore import load_vocabulary, parse_vocabulary
from ..provenance import file_sha256
from .models import (
    AnswerRequest,
    CreateSessionRequest,
    DecisionRequest,
    ErrorBody,
    MatchSchemaRequest,
    MatchValuesRequest,
    MaterializeRequest,
    MaterializeResponse,
    SessionInfo,
    UploadTableRequest,
)
from .sessions import SessionManager

_MUTATION_PHASES = {
    "upload": ("created", "tables_loaded"),
    "match_schema": ("tables_loaded", "schema_matched"),
    "match_values": ("schema_matched", "values_matched"),
    "spec": ("schema_matched", "values_matched", "spec_built"),
    "materialize": ("spec_built", "materialized"),
}


def _session_info(session) -> SessionInfo:
    state = session.state
    return SessionInfo(
        session_id=state.session_id,
        phase=state.phase,
        tables=list(state.tables),
        pending_questions=len(state.pending_questions()),
        artifacts=sorted(state.artifacts),
    )


def _check_phase(session, operation: str) -> None:
    allowed = _MUTATION_PHASES[operation]
    if session.state.phase not in allowed:
        raise WrongPhaseError(
            f"{operation} not allowed in phase {session.state.phase!r} (allowed: {', '.join(allowed)})"
        )


def create_app(config: ServiceConfig | None = None, base_dir: str | Path | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="harmonkit", version="0.1.0")
    manager = SessionManager(config.provenance_dir, base_dir=base_dir)
    app.state.manager = manager
    app.state.config = config

    @app.exception_handler(HarmonkitError)
    async def harmonkit_error(request: Request, exc: HarmonkitError):
        if isinstance(exc, NotFoundError):
            status, code = 404, "not_found"
        elif isinstance(exc, (WrongPhaseError, QuestionClosedError)):
            status, code = 409, "conflict"
        else:
            status, code = 400, "validation_error"
        body = ErrorBody(error=code, detail=str(exc))
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.exception_handler(RequestValidationError)
    async def body_validation_error(request: Request, exc: RequestValidationError):
        body = ErrorBody(error="validation_error", detail=str(exc.errors()))
        return JSONResponse(status_code=400, content=body.model_dump())

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/config")
    def get_config():
        return {
            "low_score_threshold": config.low_score_threshold,
            "default_vocabulary": config.vocabulary,
        }

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": manager.ids()}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        inputs = {}
        if body.vocabulary is not None:
            schema = parse_vocabulary(body.vocabulary)
        else:
            vocab_path = body.vocabulary_path or config.vocabulary
            if vocab_path is None:
                raise SessionError("request needs vocabulary or vocabulary_path (no default configured)")
            resolved = Path(vocab_path)
            if not resolved.is_absolute():
                resolved = manager.base_dir / resolved
            schema = load_vocabulary(resolved)
            inputs[str(vocab_path)] = file_sha256(resolved)
        MatchMethod.parse(body.method)
        session = manager.create(
            schema, method=body.method, max_steps=body.max_steps, task=body.task, inputs=inputs
        )
        return _session_info(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_info(manager.get(session_id))

    @app.post("/sessions/{session_id}/tables", status_code=201)
    def upload_table(session_id: str, body: UploadTableRequest):
        with manager.locked(session_id) as session:
            _check_phase(session, "upload")
            result = session.load_table(
                path=body.path, csv_text=body.csv_text, name=body.name, columns=body.columns
            )
            return {"table": result["table"], "columns": result["columns"], "rows": result["rows"]}

    @app.post("/sessions/{session_id}/match-schema")
    def match_schema(session_id: str, body: MatchSchemaRequest):
        with manager.locked(session_id) as session:
            _check_phase(session, "match_schema")
            return {"matches": session.match_schema(source=body.table, method=body.method)}

    @app.get("/sessions/{session_id}/matches")
    def get_matches(session_id: str):
        with manager.locked(session_id) as session:
            return {
                "matches": matchers_mod.column_matches_to_json(session.state.column_matches),
                "value_tables": [
                    matchers_mod.value_table_to_json(t, session.state.method)
                    for t in session.state.value_tables
                ],
            }

    @app.get("/sessions/{session_id}/matches/{column}/alternatives")
    def get_alternatives(session_id: str, column: str, k: int = 10):
        with manager.locked(session_id) as session:
            ranked = session.peek_alternatives(column, k)
            return {"column": column, "alternatives": [{"target": t, "score": s} for t, s in ranked]}

    @app.post("/sessions/{session_id}/decisions")
    def post_decision(session_id: str, body: DecisionRequest):
        with manager.locked(session_id) as session:
            if session.state.phase == "created" or (
                body.subject.kind == "column" and not session.state.column_matches
            ):
                raise WrongPhaseError("no matches to decide on yet")
            if body.subject.kind == "value" and not session.state.value_tables:
                raise WrongPhaseError("no value matches to decide on yet")
            subject = body.subject.model_dump(exclude_none=True)
            payload = session.apply_decision(
                subject, body.verdict, target=body.target, decided_by="user", rationale=body.rationale
            )
            return {"applied": payload, "matches": matchers_mod.column_matches_to_json(session.state.column_matches)}

    @app.post("/sessions/{session_id}/match-values")
    def match_values(session_id: str, body: MatchValuesRequest):
        with manager.locked(session_id) as session:
            _check_phase(session, "match_values")
            pairs = [tuple(p) for p in body.pairs] if body.pairs is not None else None
            tables = session.match_values(
                source_columns=body.source_columns, pairs=pairs, source=body.table, method=body.method
            )
            return {"value_tables": tables}

    @app.get("/sessions/{session_id}/questions")
    def get_questions(session_id: str):
        with manager.locked(session_id) as session:
            return {
                "questions": [
                    {
                        "question_id": q.question_id,
                        "text": q.text,
                        "options": q.options,
                        "regarding": q.regarding,
                        "status": q.status,
                        "answer": q.answer,
                    }
                    for q in session.state.questions
                ]
            }

    @app.post("/sessions/{session_id}/answers")
    def post_answer(session_id: str, body: AnswerRequest):
        with manager.locked(session_id) as session:
            applied = session.answer_question(body.question_id, body.answer)
            return {"applied": applied}

    @app.post("/sessions/{session_id}/spec")
    def build_spec(session_id: str, body: MaterializeRequest | None = None):
        body = body or MaterializeRequest()
        with manager.locked(session_id) as session:
            _check_phase(session, "spec")
            result = session.build_spec(table=body.table, output=body.output)
            spec_text = session.artifact_path(result["artifact"]).read_text(encoding="utf-8")
            return {**result, "spec": json.loads(spec_text)}

    @app.post("/sessions/{session_id}/materialize", response_model=MaterializeResponse)
    def materialize(session_id: str, body: MaterializeRequest | None = None):
        body = body or MaterializeRequest()
        with manager.locked(session_id) as session:
            _check_phase(session, "materialize")
            result = session.materialize_mapping(table=body.table, output=body.output)
            csv_name = f"{result['table']}.csv"
            session.write_table(table=result["table"], path=csv_name)
            return MaterializeResponse(
                table=result["table"],
                rows=result["rows"],
                columns=result["columns"],
                artifacts=sorted(session.state.artifacts),
            )

    @app.get("/sessions/{session_id}/provenance")
    def get_provenance(session_id: str):
        with manager.locked(session_id) as session:
            return {"records": [r.to_json_obj() for r in session.log.records]}

    @app.get("/sessions/{session_id}/artifacts/{name}")
    def get_artifact(session_id: str, name: str):
        with manager.locked(session_id) as session:
            if name not in session.state.artifacts:
                raise NotFoundError(f"unknown artifact {name!r}")
            path = session.artifact_path(name)
            media = "application/json" if name.endswith(".json") else "text/csv"
            return Response(content=path.read_bytes(), media_type=media)

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app
