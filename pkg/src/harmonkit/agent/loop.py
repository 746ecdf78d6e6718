"""The plan-act-observe loop that drives a session to completion."""

from __future__ import annotations

from pathlib import Path

from ..errors import AgentLoopError, HarmonkitError
from ..provenance import file_sha256
from ..tablecore import load_vocabulary
from .planner import AgentAction, AskUser, Finish, Planner, ScriptedPlanner, ToolCall, load_playbook
from .reviewers import MockReviewer, Reviewer
from .session import HarmonizationSession


def step(session: HarmonizationSession, planner: Planner, reviewer: Reviewer) -> AgentAction:
    """Execute one agent action; tool errors are recorded, not raised."""
    state = session.state
    if state.step_count >= state.max_steps:
        raise AgentLoopError(
            f"session {state.session_id} aborted: step budget of {state.max_steps} exhausted"
        )
    action = planner.next_action(state)
    state.step_count += 1
    if isinstance(action, ToolCall):
        try:
            session.invoke_tool(action.tool, action.args, reviewer=reviewer)
        except HarmonkitError:
            pass  # recorded in the tool_result; the next planner call sees unchanged state
    elif isinstance(action, AskUser):
        session.ask_user(action.question, action.options, action.regarding)
    elif isinstance(action, Finish):
        session.finish(action.summary)
    else:
        raise AgentLoopError(f"planner returned unknown action {action!r}")
    return action


def run_session(session: HarmonizationSession, planner: Planner, reviewer: Reviewer) -> list[AgentAction]:
    """Step until Finish; pauses (raises) when user input is pending."""
    actions: list[AgentAction] = []
    while True:
        pending = session.state.pending_questions()
        if pending:
            raise AgentLoopError(
                f"session paused: {len(pending)} question(s) await user input "
                f"(first: {pending[0].text})"
            )
        action = step(session, planner, reviewer)
        actions.append(action)
        if isinstance(action, Finish):
            return actions


def run_playbook(
    playbook_path: str | Path,
    corrections_path: str | Path | None,
    out_dir: str | Path,
    provenance_dir: str | Path | None = None,
    base_dir: str | Path | None = None,
) -> HarmonizationSession:
    """Run a scripted session end to end, emitting artifacts and provenance.

    The session id is derived from the input bytes so repeated runs produce
    byte-identical logs (timestamps aside); an existing log is overwritten.
    """
    playbook_path = Path(playbook_path)
    base = Path(base_dir) if base_dir is not None else playbook_path.resolve().parent
    playbook = load_playbook(playbook_path)

    seed = file_sha256(playbook_path)
    if corrections_path is not None:
        seed += file_sha256(corrections_path)
    session_id = f"session-{seed[:12]}"

    reviewer = MockReviewer.from_file(corrections_path) if corrections_path else MockReviewer()
    vocab_path = Path(playbook["vocabulary"])
    if not vocab_path.is_absolute():
        vocab_path = base / vocab_path
    schema = load_vocabulary(vocab_path)

    table_path = Path(playbook["table"])
    inputs = {
        playbook["table"]: file_sha256(table_path if table_path.is_absolute() else base / table_path),
        playbook["vocabulary"]: file_sha256(vocab_path),
    }

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prov_dir = Path(provenance_dir) if provenance_dir is not None else out_dir
    prov_dir.mkdir(parents=True, exist_ok=True)
    log_path = prov_dir / f"{session_id}.provenance.jsonl"
    if log_path.exists():
        log_path.unlink()

    session = HarmonizationSession.create(
        session_id,
        schema,
        log_path=log_path,
        artifact_dir=out_dir,
        base_dir=base,
        method=playbook.get("method", "tfidf_ngram"),
        max_steps=int(playbook.get("max_steps", 64)),
        task=playbook.get("task", ""),
        inputs=inputs,
    )
    planner = ScriptedPlanner(playbook)
    try:
        run_session(session, planner, reviewer)
    finally:
        session.log.close()
    return session


def apply_user_answer(session: HarmonizationSession, question_id: str, answer: str) -> dict:
    """Answer a pending question (see HarmonizationSession.answer_question)."""
    return session.answer_question(question_id, answer)
