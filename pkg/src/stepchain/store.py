"""Session persistence: one JSON envelope per session, written atomically.

Envelope: {"schema_version": 1, "session": {...}, "checksum": sha256 of the
canonical session JSON}.  load(save(s)) reproduces the session exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

from .adaptation import EditRecord, PreferenceVector
from .backends import ModelMetadata
from .chain import (
    DependencyGraph,
    Provenance,
    ReasoningChain,
    ReasoningStep,
    StepStatus,
)
from .commands import Scope
from .engine import FinalAnswer
from .errors import FixtureSchemaError, StoreUnwritableError
from .safeguards import build_disclosure
from .session import Session, SessionConfig, SessionState, TranscriptEvent

SCHEMA_VERSION = 1


def chain_to_dict(chain: ReasoningChain) -> dict[str, Any]:
    return {
        "steps": [
            {
                "id": step.id,
                "ordinal": step.ordinal,
                "text": step.text,
                "status": step.status.value,
                "provenance": step.provenance.value,
            }
            for step in chain.steps
        ],
        "edges": sorted([f, t] for f, t in chain.graph.edges),
        "next_id": chain.next_id,
    }


def chain_from_dict(data: dict[str, Any]) -> ReasoningChain:
    steps = tuple(
        ReasoningStep(
            id=raw["id"],
            ordinal=raw["ordinal"],
            text=raw["text"],
            status=StepStatus(raw["status"]),
            provenance=Provenance(raw["provenance"]),
        )
        for raw in data["steps"]
    )
    graph = DependencyGraph(
        nodes=frozenset(step.id for step in steps),
        edges=frozenset((f, t) for f, t in data["edges"]),
    )
    return ReasoningChain(steps=steps, graph=graph, next_id=data["next_id"])


def session_to_dict(session: Session) -> dict[str, Any]:
    config = session.config
    final = session.final_answer
    return {
        "id": session.id,
        "query": session.query,
        "state": session.state.value,
        "chain": chain_to_dict(session.chain),
        "config": {
            "candidates": config.candidates,
            "alpha": config.alpha,
            "theta": config.theta,
            "default_scope": config.default_scope.value,
            "temperature": config.temperature,
            "seed": config.seed,
            "endpoint": config.endpoint,
            "session_id": config.session_id,
        },
        "transcript": [
            {"seq": event.seq, "kind": event.kind, "payload": event.payload}
            for event in session.transcript
        ],
        "preferences": {
            "p": list(session.preferences.p),
            "update_count": session.preferences.update_count,
            "alpha": session.preferences.alpha,
        },
        "edit_log": [
            {
                "session_id": record.session_id,
                "step_id": record.step_id,
                "original": record.original,
                "revision": record.revision,
                "timestamp": record.timestamp,
            }
            for record in session.edit_log
        ],
        "edit_turns": session.edit_turns,
        "pending_freeform": session.pending_freeform,
        "pending_override": session.pending_override,
        "final_answer": None
        if final is None
        else {
            "text": final.text,
            "chain": chain_to_dict(final.chain_snapshot),
            "disclosure": {
                "model_version": final.disclosure.model_version,
                "parameters": final.disclosure.parameters,
                "confidence": final.disclosure.confidence,
            },
        },
    }


def session_from_dict(data: dict[str, Any]) -> Session:
    config_raw = data["config"]
    config = SessionConfig(
        candidates=config_raw["candidates"],
        alpha=config_raw["alpha"],
        theta=config_raw["theta"],
        default_scope=Scope(config_raw["default_scope"]),
        temperature=config_raw["temperature"],
        seed=config_raw["seed"],
        endpoint=config_raw["endpoint"],
        session_id=config_raw["session_id"],
    )
    final = None
    if data["final_answer"] is not None:
        raw = data["final_answer"]
        metadata = ModelMetadata(
            model_version=raw["disclosure"]["model_version"],
            parameters=raw["disclosure"]["parameters"],
            confidence=raw["disclosure"]["confidence"],
        )
        final = FinalAnswer(
            text=raw["text"],
            chain_snapshot=chain_from_dict(raw["chain"]),
            disclosure=build_disclosure(metadata),
        )
    return Session(
        id=data["id"],
        query=data["query"],
        chain=chain_from_dict(data["chain"]),
        state=SessionState(data["state"]),
        config=config,
        transcript=[
            TranscriptEvent(seq=raw["seq"], kind=raw["kind"], payload=raw["payload"])
            for raw in data["transcript"]
        ],
        preferences=PreferenceVector(
            p=tuple(data["preferences"]["p"]),
            update_count=data["preferences"]["update_count"],
            alpha=data["preferences"]["alpha"],
        ),
        edit_log=[
            EditRecord(
                session_id=raw["session_id"],
                step_id=raw["step_id"],
                original=raw["original"],
                revision=raw["revision"],
                timestamp=raw["timestamp"],
            )
            for raw in data["edit_log"]
        ],
        edit_turns=data["edit_turns"],
        pending_freeform=data["pending_freeform"],
        pending_override=data["pending_override"],
        final_answer=final,
    )


def _canonical(data: dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def make_envelope(session: Session) -> dict[str, Any]:
    session_data = session_to_dict(session)
    checksum = hashlib.sha256(_canonical(session_data).encode("utf-8")).hexdigest()
    return {"schema_version": SCHEMA_VERSION, "session": session_data, "checksum": checksum}


def load_envelope(data: dict[str, Any]) -> Session:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise FixtureSchemaError("unsupported envelope schema version")
    session_data = data.get("session")
    if not isinstance(session_data, dict):
        raise FixtureSchemaError("envelope lacks a session object")
    checksum = hashlib.sha256(_canonical(session_data).encode("utf-8")).hexdigest()
    if checksum != data.get("checksum"):
        raise FixtureSchemaError("envelope checksum does not match its content")
    return session_from_dict(session_data)


class SessionStore:
    """One JSON file per session under a directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def path_for(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def save(self, session: Session) -> Path:
        """Atomic write: the prior version survives until the new one lands."""
        envelope = make_envelope(session)
        target = self.path_for(session.id)
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(
                prefix=f".{session.id}.", suffix=".tmp", dir=self.directory
            )
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as handle:
                    json.dump(envelope, handle, sort_keys=True, indent=2)
                os.replace(tmp_name, target)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as exc:
            raise StoreUnwritableError(f"cannot write {target}: {exc}") from exc
        return target

    def load(self, session_id: str) -> Session:
        path = self.path_for(session_id)
        data = json.loads(path.read_text(encoding="utf-8"))
        return load_envelope(data)

    def list_ids(self) -> list[str]:
        if not self.directory.exists():
            return []
        return sorted(path.stem for path in self.directory.glob("*.json"))


def save_session(session: Session, store: SessionStore) -> Path:
    return store.save(session)


def load_session(store: SessionStore, session_id: str) -> Session:
    return store.load(session_id)
