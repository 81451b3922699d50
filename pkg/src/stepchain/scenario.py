"""Scripted-dialogue replay: run a fixture end-to-end and diff every message.

A scenario fixture bundles the backend script, the user's utterances, and the
exact messages the engine must produce.  Replay succeeds only when every
produced message matches the fixture byte-for-byte (and, when pinned, the
final export document too).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .backends import load_script
from .commands import ExportFormat, Scope
from .engine import export_session, handle_utterance, start_session
from .errors import FixtureSchemaError
from .session import Session, SessionConfig


@dataclass
class ScenarioResult:
    status: int  # 0 only when every message matched
    messages: list[str] = field(default_factory=list)
    failure: str | None = None
    session: Session | None = None


def load_scenario(path: str | Path) -> dict[str, Any]:
    """Read and validate a scenario fixture document."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FixtureSchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict) or not document:
        raise FixtureSchemaError("scenario must be a non-empty JSON object")
    if document.get("version") != 1:
        raise FixtureSchemaError("scenario version must be 1")
    if not isinstance(document.get("query"), str) or not document["query"].strip():
        raise FixtureSchemaError("scenario needs a non-empty query")
    if not isinstance(document.get("script"), dict):
        raise FixtureSchemaError("scenario needs an embedded backend script")
    if not isinstance(document.get("expected_initial_messages"), list):
        raise FixtureSchemaError("scenario needs expected_initial_messages")
    turns = document.get("turns")
    if not isinstance(turns, list):
        raise FixtureSchemaError("scenario needs a turns list")
    for position, turn in enumerate(turns):
        if (
            not isinstance(turn, dict)
            or not isinstance(turn.get("utterance"), str)
            or not isinstance(turn.get("expected_messages"), list)
        ):
            raise FixtureSchemaError(f"turn {position} is malformed")
    export = document.get("expected_export")
    if export is not None:
        if (
            not isinstance(export, dict)
            or export.get("format") not in ("Markdown", "Json")
            or not isinstance(export.get("document"), str)
        ):
            raise FixtureSchemaError("expected_export must carry format and document")
    return document


def _config_from(document: dict[str, Any]) -> SessionConfig:
    raw = document.get("config") or {}
    config = SessionConfig()
    if "candidates" in raw:
        config.candidates = int(raw["candidates"])
    if "alpha" in raw:
        config.alpha = float(raw["alpha"])
    if "theta" in raw:
        config.theta = float(raw["theta"])
    if "temperature" in raw:
        config.temperature = float(raw["temperature"])
    if "seed" in raw:
        config.seed = int(raw["seed"])
    if "default_scope" in raw:
        config.default_scope = Scope(raw["default_scope"])
    if "session_id" in raw:
        config.session_id = str(raw["session_id"])
    return config


def _first_divergence(stage: str, expected: list[str], got: list[str]) -> str | None:
    for position in range(max(len(expected), len(got))):
        want = expected[position] if position < len(expected) else "<missing>"
        have = got[position] if position < len(got) else "<missing>"
        if want != have:
            return f"{stage}, message {position}: expected {want!r}, got {have!r}"
    return None


def run_scenario(path: str | Path) -> ScenarioResult:
    """Replay the fixture; status 0 iff every message matches byte-for-byte."""
    document = load_scenario(path)
    backend = load_script(document["script"])
    config = _config_from(document)

    collected: list[str] = []
    outcome = start_session(document["query"], config, backend)
    collected.extend(outcome.messages)
    failure = _first_divergence("initial", document["expected_initial_messages"], outcome.messages)
    if failure:
        return ScenarioResult(1, collected, failure, outcome.session)

    for position, turn in enumerate(document["turns"]):
        outcome = handle_utterance(outcome.session, turn["utterance"], backend)
        collected.extend(outcome.messages)
        failure = _first_divergence(
            f"turn {position}", turn["expected_messages"], outcome.messages
        )
        if failure:
            return ScenarioResult(1, collected, failure, outcome.session)

    export = document.get("expected_export")
    if export is not None:
        fmt = ExportFormat(export["format"])
        produced = export_session(outcome.session, fmt)
        if produced != export["document"]:
            failure = _first_divergence("export", [export["document"]], [produced])
            return ScenarioResult(1, collected, failure, outcome.session)

    return ScenarioResult(0, collected, None, outcome.session)
