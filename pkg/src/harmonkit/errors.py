"""Exception hierarchy shared across the package."""


class HarmonkitError(Exception):
    """Base class for all errors raised by harmonkit."""


class CsvFormatError(HarmonkitError):
    """Input CSV violates RFC 4180 (unbalanced quotes, ragged rows, ...)."""


class VocabularyError(HarmonkitError):
    """Target vocabulary file violates the vocabulary schema."""


class MatcherError(HarmonkitError):
    """Invalid matcher invocation (unknown column, empty schema, bad k)."""


class SpecError(HarmonkitError):
    """Mapping specification is malformed or violates its invariants."""


class MaterializeError(HarmonkitError):
    """Mapping spec cannot be executed against the given table."""


class ToolError(HarmonkitError):
    """Tool registry violation (unknown tool, bad arguments)."""


class ReviewerError(HarmonkitError):
    """The reviewer backend failed (timeout, protocol violation)."""


class SessionError(HarmonkitError):
    """Session is in the wrong phase or received an invalid reference."""


class NotFoundError(SessionError):
    """Referenced session, question, or artifact does not exist."""


class UnknownQuestionError(NotFoundError):
    """Referenced question id does not exist."""


class QuestionClosedError(SessionError):
    """Referenced question was already answered."""


class WrongPhaseError(SessionError):
    """Operation is not allowed in the session's current phase."""


class AgentLoopError(HarmonkitError):
    """The agent loop aborted (step budget exhausted, unanswered questions)."""


class ProvenanceError(HarmonkitError):
    """Provenance log violation (sequence gap, incomplete log)."""


class ReplayDivergenceError(ProvenanceError):
    """Replay produced a result that differs from the recorded log."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"replay diverged at seq {seq}: {message}")
        self.seq = seq


class EvalError(HarmonkitError):
    """Evaluation inputs are malformed."""
