"""Session lifecycle: the state machine plus the mutable per-dialogue record."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

from .adaptation import EditRecord, PreferenceVector
from .chain import EMPTY_CHAIN, ReasoningChain
from .commands import Scope
from .errors import IllegalTransitionError

if TYPE_CHECKING:
    from .engine import FinalAnswer


class SessionState(Enum):
    CREATED = "Created"
    DRAFTING = "Drafting"
    AWAITING_REVIEW = "AwaitingReview"
    REGENERATING = "Regenerating"
    FINALIZING = "Finalizing"
    DONE = "Done"
    FAILED = "Failed"


class SessionEvent(Enum):
    START = "Start"
    DRAFT_READY = "DraftReady"
    EDIT_APPLIED = "EditApplied"
    REGEN_DONE = "RegenDone"
    CONFIRM = "Confirm"
    ANSWER_READY = "AnswerReady"
    FATAL_ERROR = "FatalError"


# The only legal moves.  Done is reachable solely through Finalizing, and
# Finalizing solely from AwaitingReview on an explicit Confirm: that is the
# finalization gate, and nothing below may weaken it.
_TRANSITIONS: dict[tuple[SessionState, SessionEvent], SessionState] = {
    (SessionState.CREATED, SessionEvent.START): SessionState.DRAFTING,
    (SessionState.DRAFTING, SessionEvent.DRAFT_READY): SessionState.AWAITING_REVIEW,
    (SessionState.AWAITING_REVIEW, SessionEvent.EDIT_APPLIED): SessionState.REGENERATING,
    (SessionState.REGENERATING, SessionEvent.REGEN_DONE): SessionState.AWAITING_REVIEW,
    (SessionState.AWAITING_REVIEW, SessionEvent.CONFIRM): SessionState.FINALIZING,
    (SessionState.FINALIZING, SessionEvent.ANSWER_READY): SessionState.DONE,
}


def transition(state: SessionState, event: SessionEvent) -> SessionState:
    """Next state for (state, event); raises IllegalTransitionError otherwise.

    FatalError is legal from any state and always lands in Failed.
    """
    if event is SessionEvent.FATAL_ERROR:
        return SessionState.FAILED
    nxt = _TRANSITIONS.get((state, event))
    if nxt is None:
        raise IllegalTransitionError(f"{event.value} is not legal in state {state.value}")
    return nxt


@dataclass
class SessionConfig:
    candidates: int = 1
    alpha: float = 0.3
    theta: float = 0.25
    default_scope: Scope = Scope.CASCADE
    temperature: float = 0.7
    seed: int | None = None
    endpoint: str | None = None
    session_id: str | None = None


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    kind: str
    payload: dict[str, Any]


@dataclass
class Session:
    """One dialogue: immutable query, evolving chain, append-only transcript."""

    id: str
    query: str
    chain: ReasoningChain
    state: SessionState
    config: SessionConfig
    transcript: list[TranscriptEvent] = field(default_factory=list)
    preferences: PreferenceVector = field(default_factory=PreferenceVector)
    edit_log: list[EditRecord] = field(default_factory=list)
    edit_turns: int = 0
    pending_freeform: str | None = None
    pending_override: str | None = None
    final_answer: "FinalAnswer | None" = None

    def record(self, kind: str, payload: dict[str, Any]) -> TranscriptEvent:
        event = TranscriptEvent(seq=len(self.transcript), kind=kind, payload=payload)
        self.transcript.append(event)
        return event

    def apply_event(self, event: SessionEvent) -> None:
        new_state = transition(self.state, event)
        self.state = new_state
        self.record("StateChanged", {"event": event.value, "state": new_state.value})


def new_session(query: str, config: SessionConfig, session_id: str) -> Session:
    return Session(
        id=session_id,
        query=query,
        chain=EMPTY_CHAIN,
        state=SessionState.CREATED,
        config=config,
        preferences=PreferenceVector(alpha=config.alpha),
    )
