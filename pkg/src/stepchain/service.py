"""HTTP shell: JSON API plus a server-push event stream over the engine.

Every state change observable here is produced by calling the engine with
the same inputs a direct caller would use; requests for one session are
serialized in arrival order.
"""

from __future__ import annotations

import json
import threading
import time
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .backends import CompletionBackend
from .commands import ExportFormat
from .engine import export_session, handle_utterance, start_session
from .errors import (
    EmptyQueryError,
    IllegalTransitionError,
    StepchainError,
)
from .scenario import _config_from
from .session import Session
from .store import SessionStore, make_envelope


class CreateSessionBody(BaseModel):
    query: str
    config: dict[str, Any] | None = None


class UtteranceBody(BaseModel):
    text: str


def create_app(
    backend: CompletionBackend,
    store: SessionStore | None = None,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="stepchain", version="0.1.0")
    sessions: dict[str, Session] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def lock_for(session_id: str) -> threading.Lock:
        with registry_lock:
            return locks.setdefault(session_id, threading.Lock())

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None and store is not None:
            try:
                session = store.load(session_id)
                sessions[session_id] = session
            except FileNotFoundError:
                session = None
        if session is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return session

    def persist(session: Session) -> None:
        if store is not None:
            store.save(session)

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict[str, Any]:
        config = _config_from({"config": body.config or {}})
        try:
            outcome = start_session(body.query, config, backend)
        except EmptyQueryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except StepchainError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        session = outcome.session
        sessions[session.id] = session
        persist(session)
        return {"session_id": session.id, "messages": outcome.messages}

    @app.get("/sessions/{session_id}")
    def read_session(session_id: str) -> dict[str, Any]:
        return make_envelope(get_session(session_id))

    @app.post("/sessions/{session_id}/utterances")
    def post_utterance(session_id: str, body: UtteranceBody) -> dict[str, Any]:
        session = get_session(session_id)
        with lock_for(session_id):
            try:
                outcome = handle_utterance(session, body.text, backend)
            except IllegalTransitionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except StepchainError as exc:
                raise HTTPException(status_code=502, detail=str(exc))
            persist(session)
        return {"messages": outcome.messages, "state": session.state.value}

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, format: str = "markdown"):
        session = get_session(session_id)
        if format.lower() == "json":
            return PlainTextResponse(
                export_session(session, ExportFormat.JSON), media_type="application/json"
            )
        if format.lower() == "markdown":
            return PlainTextResponse(
                export_session(session, ExportFormat.MARKDOWN), media_type="text/markdown"
            )
        raise HTTPException(status_code=400, detail="format must be markdown or json")

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, request: Request, since: int = 0, follow: int = 1):
        session = get_session(session_id)

        def stream():
            cursor = since
            while True:
                batch = session.transcript[cursor:]
                for event in batch:
                    payload = json.dumps(
                        {"seq": event.seq, "kind": event.kind, "payload": event.payload},
                        sort_keys=True,
                    )
                    yield f"id: {event.seq}\ndata: {payload}\n\n"
                    cursor = event.seq + 1
                if not follow:
                    break
                time.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if ui_dir is not None:
        # Same-origin static hosting for the browser client; API routes above
        # keep precedence, the mount only catches what they do not.
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
