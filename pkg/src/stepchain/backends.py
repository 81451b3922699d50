"""Completion backends behind one interface.

Three implementations: a fixture-driven scripted backend for byte-exact
offline replays, a synthetic echo backend for demos and property tests, and
a generic JSON chat-completion client for live endpoints.  Every response
carries disclosure metadata (version, echoed parameters, optional
confidence).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Mapping, Protocol

import requests

from .errors import (
    BackendMalformedReplyError,
    BackendUnreachableError,
    FixtureSchemaError,
    ScriptMissError,
)

if TYPE_CHECKING:
    from .protocol import PromptBundle


@dataclass(frozen=True)
class ModelMetadata:
    model_version: str
    parameters: dict[str, Any] = field(default_factory=dict)
    confidence: float | None = None

    def __post_init__(self) -> None:
        if not self.model_version:
            raise ValueError("model_version must be non-empty")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class ModelResponse:
    candidates: tuple[str, ...]
    metadata: ModelMetadata

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError("candidates must be non-empty")


class CompletionBackend(Protocol):
    def complete(
        self, bundle: "PromptBundle", n: int, params: Mapping[str, Any]
    ) -> ModelResponse: ...


def _echo_params(n: int, params: Mapping[str, Any]) -> dict[str, Any]:
    echoed = {key: value for key, value in params.items() if value is not None}
    echoed["n"] = n
    return echoed


ScriptKey = tuple[str, tuple[int, ...], int]  # (purpose, target ordinals, edit turn)


@dataclass(frozen=True)
class ScriptEntry:
    candidates: tuple[str, ...]
    confidence: float | None = None


class ScriptedBackend:
    """Deterministic fixture replay: a pure function of (bundle, n, params).

    Entries are keyed by the bundle's purpose, target ordinals, and edit
    turn.  Identical inputs always produce identical responses; an unknown
    key raises ScriptMissError.
    """

    model_version = "scripted-v1"

    def __init__(self, entries: Mapping[ScriptKey, ScriptEntry]):
        self.entries = dict(entries)

    def complete(
        self, bundle: "PromptBundle", n: int, params: Mapping[str, Any]
    ) -> ModelResponse:
        if n < 1:
            raise ValueError("candidate count must be >= 1")
        key: ScriptKey = (bundle.purpose.value, tuple(bundle.targets), bundle.turn)
        entry = self.entries.get(key)
        if entry is None:
            raise ScriptMissError(key)
        candidates = entry.candidates[:n]
        echoed = _echo_params(n, params)
        if len(candidates) < n:
            echoed["shortfall"] = n - len(candidates)
        metadata = ModelMetadata(
            model_version=self.model_version,
            parameters=echoed,
            confidence=entry.confidence,
        )
        return ModelResponse(candidates=candidates, metadata=metadata)


def load_script(source: Mapping[str, Any] | str | Path) -> ScriptedBackend:
    """Build a scripted backend from a fixture document.

    Schema: {"version": 1, "entries": [{"key": {"purpose": str,
    "stale": [int], "turn": int}, "candidates": [str], "confidence": num}]}.
    Duplicate keys are rejected.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.exists():
            document = json.loads(path.read_text(encoding="utf-8"))
        else:
            document = json.loads(str(source))
    else:
        document = source
    if not isinstance(document, dict):
        raise FixtureSchemaError("fixture must be a JSON object")
    if document.get("version") != 1:
        raise FixtureSchemaError("fixture version must be 1")
    raw_entries = document.get("entries")
    if not isinstance(raw_entries, list):
        raise FixtureSchemaError('fixture must carry an "entries" list')

    entries: dict[ScriptKey, ScriptEntry] = {}
    for position, raw in enumerate(raw_entries):
        if not isinstance(raw, dict) or not isinstance(raw.get("key"), dict):
            raise FixtureSchemaError(f"entry {position} is malformed")
        raw_key = raw["key"]
        purpose = raw_key.get("purpose")
        stale = raw_key.get("stale")
        turn = raw_key.get("turn")
        if (
            not isinstance(purpose, str)
            or not isinstance(stale, list)
            or not all(isinstance(o, int) for o in stale)
            or not isinstance(turn, int)
        ):
            raise FixtureSchemaError(f"entry {position} has a malformed key")
        candidates = raw.get("candidates")
        if (
            not isinstance(candidates, list)
            or not candidates
            or not all(isinstance(c, str) for c in candidates)
        ):
            raise FixtureSchemaError(f"entry {position} needs a non-empty candidates list")
        confidence = raw.get("confidence")
        if confidence is not None:
            if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
                raise FixtureSchemaError(f"entry {position} confidence must lie in [0, 1]")
            confidence = float(confidence)
        key: ScriptKey = (purpose, tuple(stale), turn)
        if key in entries:
            raise FixtureSchemaError(f"duplicate key {key!r}")
        entries[key] = ScriptEntry(candidates=tuple(candidates), confidence=confidence)
    return ScriptedBackend(entries)


class EchoBackend:
    """Synthetic deterministic backend for demos and property tests.

    Drafts a fixed-size chain, re-emits requested stale steps with texts that
    change every edit turn, and answers audits and finalization with stock
    text.  No fixtures needed.
    """

    model_version = "echo-v1"

    def __init__(self, draft_steps: int = 4):
        self.draft_steps = draft_steps

    def complete(
        self, bundle: "PromptBundle", n: int, params: Mapping[str, Any]
    ) -> ModelResponse:
        if n < 1:
            raise ValueError("candidate count must be >= 1")
        purpose = bundle.purpose.value
        if purpose == "InitialDraft":
            text = "\n\n".join(
                f"[Step {i}] Draft reasoning step {i}." for i in range(1, self.draft_steps + 1)
            )
        elif purpose == "RegenerateStale":
            text = "\n\n".join(
                f"[Step {o}] Regenerated step {o} (pass {bundle.turn})." for o in bundle.targets
            )
        elif purpose == "FinalAnswer":
            text = "Final answer derived from the confirmed reasoning chain."
        else:
            text = "No strong bias detected in the examined step."
        metadata = ModelMetadata(
            model_version=self.model_version,
            parameters=_echo_params(n, params),
            confidence=0.5,
        )
        return ModelResponse(candidates=(text,) * n, metadata=metadata)


Transport = Callable[[str, dict, dict, float], tuple[int, Any]]


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, Any]:
    response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    return response.status_code, response.json()


class HttpBackend:
    """Generic JSON chat-completion client.

    Request: {"model", "messages": [{"role": "system"|"user", "content"}],
    "n", "temperature", "seed"?}.  Reply: {"choices": [{"text"} |
    {"message": {"content"}}], "model"}.  One retry on connection failure.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        timeout: float = 30.0,
        auth_token: str | None = None,
        transport: Transport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.auth_token = auth_token
        self.transport = transport or _requests_transport

    def complete(
        self, bundle: "PromptBundle", n: int, params: Mapping[str, Any]
    ) -> ModelResponse:
        if n < 1:
            raise ValueError("candidate count must be >= 1")
        payload: dict[str, Any] = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.user_text()},
            ],
            "n": n,
            "temperature": params.get("temperature", 0.7),
        }
        if params.get("seed") is not None:
            payload["seed"] = params["seed"]
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"

        reply = None
        last_error: Exception | None = None
        for _ in range(2):  # single configurable retry
            try:
                status, reply = self.transport(self.endpoint, payload, headers, self.timeout)
            except (requests.RequestException, OSError) as exc:
                last_error = exc
                continue
            if status >= 500:
                last_error = BackendUnreachableError(f"endpoint returned {status}")
                continue
            break
        else:
            raise BackendUnreachableError(f"cannot reach {self.endpoint}: {last_error}")

        if not isinstance(reply, dict) or not isinstance(reply.get("choices"), list):
            raise BackendMalformedReplyError("reply lacks a choices list")
        candidates = []
        confidence: float | None = None
        for choice in reply["choices"]:
            if not isinstance(choice, dict):
                raise BackendMalformedReplyError("choice is not an object")
            if isinstance(choice.get("text"), str):
                candidates.append(choice["text"])
            elif isinstance(choice.get("message"), dict) and isinstance(
                choice["message"].get("content"), str
            ):
                candidates.append(choice["message"]["content"])
            else:
                raise BackendMalformedReplyError("choice carries no text")
            # Optional mean token log-probability, squashed monotonically
            # into [0, 1]; absent means no confidence is disclosed.
            logprob = choice.get("logprob")
            if confidence is None and isinstance(logprob, (int, float)) and logprob <= 0:
                confidence = min(1.0, math.exp(float(logprob)))
        if not candidates:
            raise BackendMalformedReplyError("reply carries no candidates")
        version = reply.get("model") if isinstance(reply.get("model"), str) else None
        metadata = ModelMetadata(
            model_version=version or self.model,
            parameters=_echo_params(n, params),
            confidence=confidence,
        )
        return ModelResponse(candidates=tuple(candidates[:n]), metadata=metadata)
