"""Server-side session store: creation, per-session locking, restore from disk."""

from __future__ import annotations

import secrets
import threading
from contextlib import contextmanager
from pathlib import Path

from ..errors import NotFoundError
from ..tablecore import TargetSchema
from ..agent.session import HarmonizationSession, restore_session


class SessionManager:
    """Holds live sessions; sessions persist as provenance logs plus artifacts.

    A session directory layout under the provenance root:
      <root>/<session_id>.provenance.jsonl
      <root>/<session_id>/            (artifacts)
    Restarting the server with the same root restores any session lazily
    from its log, back to its last persisted phase.
    """

    def __init__(self, provenance_dir: str | Path, base_dir: str | Path | None = None):
        self.provenance_dir = Path(provenance_dir)
        self.provenance_dir.mkdir(parents=True, exist_ok=True)
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self._sessions: dict[str, HarmonizationSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.provenance_dir / f"{session_id}.provenance.jsonl"

    def _artifact_dir(self, session_id: str) -> Path:
        return self.provenance_dir / session_id

    def create(
        self,
        schema: TargetSchema,
        method: str = "tfidf_ngram",
        max_steps: int = 64,
        task: str = "",
        inputs: dict[str, str] | None = None,
    ) -> HarmonizationSession:
        session_id = f"session-{secrets.token_hex(6)}"
        session = HarmonizationSession.create(
            session_id,
            schema,
            log_path=self._log_path(session_id),
            artifact_dir=self._artifact_dir(session_id),
            base_dir=self.base_dir,
            method=method,
            max_steps=max_steps,
            task=task,
            inputs=inputs,
        )
        with self._registry_lock:
            self._sessions[session_id] = session
            self._locks[session_id] = threading.Lock()
        return session

    def get(self, session_id: str) -> HarmonizationSession:
        with self._registry_lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        log_path = self._log_path(session_id)
        if not log_path.is_file():
            raise NotFoundError(f"unknown session {session_id!r}")
        session = restore_session(
            log_path, base_dir=self.base_dir, artifact_dir=self._artifact_dir(session_id)
        )
        with self._registry_lock:
            self._sessions.setdefault(session_id, session)
            self._locks.setdefault(session_id, threading.Lock())
            return self._sessions[session_id]

    def ids(self) -> list[str]:
        with self._registry_lock:
            live = set(self._sessions)
        on_disk = {p.name.removesuffix(".provenance.jsonl") for p in self.provenance_dir.glob("*.provenance.jsonl")}
        return sorted(live | on_disk)

    @contextmanager
    def locked(self, session_id: str):
        """Serialize requests per session; different sessions proceed in parallel."""
        session = self.get(session_id)
        with self._registry_lock:
            lock = self._locks.setdefault(session_id, threading.Lock())
        with lock:
            yield session
