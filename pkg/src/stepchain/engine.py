"""Session engine: the draft -> review -> edit -> regenerate -> confirm loop.

This module wires the chain model, text protocol, backends, adaptation, and
safeguards into one orchestrator.  Hard rules enforced here:

* the final answer is gated behind an explicit Confirm issued during review;
* after an edit, only the edited steps and their invalidated descendants may
  change text; everything else stays byte-identical;
* every model call discloses version, parameters, and confidence into the
  transcript;
* freeform utterances are never silently sent to the model.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass

from .adaptation import EditRecord, record_edit, rerank, synthesize_directives
from .backends import CompletionBackend, ModelResponse
from .chain import (
    Provenance,
    ReasoningChain,
    StepStatus,
    apply_edit_sequence,
    mark_stale,
    set_step_text,
)
from .commands import (
    BiasCheck,
    Confirm,
    Delete,
    EditCommand,
    Export,
    ExportFormat,
    Freeform,
    Insert,
    Merge,
    Replace,
    is_structural,
)
from .errors import (
    EmptyChainError,
    EmptyQueryError,
    EmptyReplacementTextError,
    IllegalTransitionError,
    MergeNonAdjacentError,
    NoStaleStepsError,
    RegeneratedWrongStepsError,
    StaleStepsRemainError,
    StepchainError,
    UnknownStepError,
)
from .protocol import (
    PromptBundle,
    PromptPurpose,
    format_step_list,
    parse_chain,
    parse_command,
    render_chain,
    render_prompt,
)
from .safeguards import PII_KIND_LABELS, Disclosure, build_disclosure, detect_pii
from .session import Session, SessionConfig, SessionEvent, SessionState, new_session

REVIEW_QUESTION = "Do you want to edit any step before I generate the final answer?"
EXPORT_OFFER = (
    "Would you like to export the reasoning chain and final answer? "
    'Say "export as markdown" or "export as json".'
)
FREEFORM_PROMPT = (
    "I did not recognize an edit command in that. "
    'Reply "forward" to send it to the model as a regeneration request, '
    'or restate it as an edit (for example, "Replace Step 2 with: ...").'
)
OVERRIDE_PROMPT = 'Reply "override" to apply this edit anyway, or revise it.'


@dataclass
class EngineOutcome:
    """What one engine call hands back to the user-facing shell."""

    session: Session
    messages: list[str]
    finished: bool


@dataclass(frozen=True)
class FinalAnswer:
    text: str
    chain_snapshot: ReasoningChain  # contains no stale steps
    disclosure: Disclosure


def start_session(
    query: str, config: SessionConfig | None = None, backend: CompletionBackend | None = None
) -> EngineOutcome:
    """Draft the initial chain for a query and enter review.

    Messages are [disclosure, rendered chain, review question], with PII
    warnings inserted before the question when the model output trips the
    scanner.  A draft with no parseable steps gets one automatic re-prompt;
    a second failure fails the session.
    """
    if backend is None:
        raise ValueError("a completion backend is required")
    if not query.strip():
        raise EmptyQueryError("query must be non-empty")
    config = config or SessionConfig()
    session = new_session(query, config, config.session_id or uuid.uuid4().hex)
    session.record("SessionCreated", {"query": query})
    session.apply_event(SessionEvent.START)

    directives = synthesize_directives(session.preferences, config.theta)
    bundle = render_prompt(session, PromptPurpose.INITIAL_DRAFT, directives)
    response, disclosure = _complete(session, backend, bundle)
    shown = [disclosure.rendered]
    top = rerank(response.candidates, session.preferences)[0]

    chain: ReasoningChain | None = None
    try:
        chain = parse_chain(top)
    except StepchainError:
        response, retry_disclosure = _complete(session, backend, bundle)
        shown.append(retry_disclosure.rendered)
        top = rerank(response.candidates, session.preferences)[0]
        try:
            chain = parse_chain(top)
        except StepchainError as exc:
            session.record("DraftFailed", {"error": str(exc)})
            session.apply_event(SessionEvent.FATAL_ERROR)
            shown.append("The model did not produce a numbered reasoning chain; giving up.")
            return EngineOutcome(session, shown, finished=True)

    session.chain = chain
    session.record(
        "ChainUpdated", {"ordinals": chain.ordinals(), "chain": _chain_payload(chain)}
    )
    warnings = _pii_warnings(session, top, "the model output")
    session.apply_event(SessionEvent.DRAFT_READY)
    return EngineOutcome(
        session, shown + [render_chain(chain), *warnings, REVIEW_QUESTION], finished=False
    )


def handle_utterance(
    session: Session, utterance: str, backend: CompletionBackend
) -> EngineOutcome:
    """Route one review-time utterance through the command grammar."""
    if session.state is not SessionState.AWAITING_REVIEW:
        raise IllegalTransitionError(
            f"utterances are only accepted while awaiting review, not in {session.state.value}"
        )
    session.record("UserUtterance", {"text": utterance})
    normalized = utterance.strip().lower().rstrip(".!")

    if session.pending_freeform is not None:
        pending = session.pending_freeform
        session.pending_freeform = None
        if normalized.startswith("forward") or normalized in ("yes", "send it"):
            return _forward_freeform(session, pending, backend)
        # anything else drops the held text and is handled on its own

    if session.pending_override is not None:
        held = session.pending_override
        session.pending_override = None
        if normalized == "override":
            commands = parse_command(held, session.config.default_scope)
            return _process_commands(session, commands, backend, pii_gate=False, raw=held)

    commands = parse_command(utterance, session.config.default_scope)
    return _process_commands(session, commands, backend, pii_gate=True, raw=utterance)


def regenerate_stale(
    session: Session, backend: CompletionBackend, guidance: str | None = None
) -> Session:
    """Regenerate every stale step, one model call per contiguous stale block.

    Each call names exactly its block's ordinals; the reply must re-emit
    those ordinals and nothing else (one re-prompt, then the session fails).
    Non-stale steps are left byte-identical; regenerated steps keep their ids
    and come back Fresh.
    """
    if session.state is not SessionState.REGENERATING:
        raise IllegalTransitionError("regeneration requires the Regenerating state")
    if not session.chain.stale_steps():
        raise NoStaleStepsError("no steps are marked stale")

    directives = synthesize_directives(session.preferences, session.config.theta)
    for block in _stale_blocks(session.chain):
        ordinals = [step.ordinal for step in block]
        bundle = render_prompt(
            session,
            PromptPurpose.REGENERATE_STALE,
            directives,
            targets=ordinals,
            guidance=guidance,
        )
        response, _ = _complete(session, backend, bundle)
        replacement = _parse_regen_reply(response, session, ordinals)
        if replacement is None:
            response, _ = _complete(session, backend, bundle)
            replacement = _parse_regen_reply(response, session, ordinals)
            if replacement is None:
                got = _reply_ordinals(response, session)
                session.record("RegenerationFailed", {"expected": ordinals, "got": got})
                session.apply_event(SessionEvent.FATAL_ERROR)
                raise RegeneratedWrongStepsError(tuple(ordinals), tuple(got))
        raw_text, parsed = replacement
        for new_step in parsed.steps:
            target = session.chain.step_by_ordinal(new_step.ordinal)
            session.chain = set_step_text(
                session.chain,
                target.id,
                new_step.text,
                StepStatus.FRESH,
                Provenance.MODEL_GENERATED,
            )
        _pii_warnings(session, raw_text, "the model output")
        session.record(
            "Regenerated", {"ordinals": ordinals, "chain": _chain_payload(session.chain)}
        )

    session.apply_event(SessionEvent.REGEN_DONE)
    return session


def finalize(session: Session, backend: CompletionBackend) -> FinalAnswer:
    """Produce the final answer from the confirmed chain; moves to Done."""
    if session.state is not SessionState.FINALIZING:
        raise IllegalTransitionError("finalization requires the Finalizing state")
    if session.chain.is_empty():
        raise EmptyChainError("cannot finalize an empty chain")
    if session.chain.stale_steps():
        raise StaleStepsRemainError("stale steps must be regenerated before finalizing")

    directives = synthesize_directives(session.preferences, session.config.theta)
    bundle = render_prompt(session, PromptPurpose.FINAL_ANSWER, directives)
    response, disclosure = _complete(session, backend, bundle)
    text = rerank(response.candidates, session.preferences)[0].strip()
    _pii_warnings(session, text, "the model output")
    answer = FinalAnswer(text=text, chain_snapshot=session.chain, disclosure=disclosure)
    session.final_answer = answer
    session.record("FinalAnswer", {"text": text})
    session.apply_event(SessionEvent.ANSWER_READY)
    return answer


def export_session(session: Session, format: ExportFormat = ExportFormat.MARKDOWN) -> str:
    """Deterministic document for the session: Markdown report or full JSON."""
    if format is ExportFormat.JSON:
        from .store import session_to_dict

        return json.dumps(session_to_dict(session), sort_keys=True, indent=2) + "\n"

    lines = [
        "# Reasoning session",
        "",
        "## Query",
        "",
        session.query,
        "",
        "## Reasoning chain",
        "",
        render_chain(session.chain) or "(empty)",
        "",
        "## Edit history",
        "",
    ]
    history = _edit_history_lines(session)
    lines.extend(history or ["(no edits)"])
    disclosures = [
        event.payload["rendered"] for event in session.transcript if event.kind == "Disclosure"
    ]
    lines += ["", "## Disclosures", "", "\n\n".join(disclosures) or "(none)"]
    lines += [
        "",
        "## Final answer",
        "",
        session.final_answer.text if session.final_answer else "(not finalized)",
        "",
    ]
    return "\n".join(lines)


# -- internals ----------------------------------------------------------------


def _complete(
    session: Session, backend: CompletionBackend, bundle: PromptBundle
) -> tuple[ModelResponse, Disclosure]:
    """One model call: run it, disclose it, transcript it; fail the session on error."""
    params: dict = {"temperature": session.config.temperature}
    if session.config.seed is not None:
        params["seed"] = session.config.seed
    try:
        response = backend.complete(bundle, session.config.candidates, params)
    except StepchainError as exc:
        session.record("BackendError", {"error": str(exc)})
        session.apply_event(SessionEvent.FATAL_ERROR)
        raise
    disclosure = build_disclosure(response.metadata)
    session.record(
        "Disclosure",
        {
            "rendered": disclosure.rendered,
            "model_version": disclosure.model_version,
            "parameters": disclosure.parameters,
            "confidence": disclosure.confidence,
        },
    )
    session.record(
        "ModelReply",
        {"purpose": bundle.purpose.value, "candidates": list(response.candidates)},
    )
    return response, disclosure


def _chain_payload(chain: ReasoningChain) -> list[dict]:
    """Chain snapshot for transcript events, so stream consumers can render
    the chain (including Stale badges mid-regeneration) without refetching."""
    return [
        {
            "ordinal": step.ordinal,
            "text": step.text,
            "status": step.status.value,
            "provenance": step.provenance.value,
        }
        for step in chain.steps
    ]


def _pii_warnings(session: Session, text: str, where: str) -> list[str]:
    messages = []
    for finding in detect_pii(text):
        payload = {
            "kind": finding.kind.value,
            "start": finding.start,
            "end": finding.end,
            "preview": finding.preview,
            "where": where,
        }
        session.record("PiiWarning", payload)
        messages.append(_format_pii_warning(finding.kind.value, finding.preview, where))
    return messages


def _format_pii_warning(kind_value: str, preview: str, where: str) -> str:
    from .safeguards import PiiKind

    label = PII_KIND_LABELS[PiiKind(kind_value)]
    return f"Warning: possible {label} detected in {where} ({preview})."


def _messages_since(session: Session, watermark: int) -> list[str]:
    """Re-render user-facing lines from transcript events past the watermark."""
    messages = []
    for event in session.transcript[watermark:]:
        if event.kind == "Disclosure":
            messages.append(event.payload["rendered"])
        elif event.kind == "PiiWarning":
            messages.append(
                _format_pii_warning(
                    event.payload["kind"], event.payload["preview"], event.payload["where"]
                )
            )
    return messages


def _stale_blocks(chain: ReasoningChain) -> list[list]:
    blocks: list[list] = []
    current: list = []
    for step in chain.steps:
        if step.status is StepStatus.STALE:
            current.append(step)
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    return blocks


def _parse_regen_reply(response: ModelResponse, session: Session, ordinals: list[int]):
    top = rerank(response.candidates, session.preferences)[0]
    try:
        parsed = parse_chain(top)
    except StepchainError:
        return None
    if parsed.ordinals() != ordinals:
        return None
    return top, parsed


def _reply_ordinals(response: ModelResponse, session: Session) -> list[int]:
    top = rerank(response.candidates, session.preferences)[0]
    try:
        return parse_chain(top).ordinals()
    except StepchainError:
        return []


def _process_commands(
    session: Session,
    commands: list[EditCommand],
    backend: CompletionBackend,
    pii_gate: bool,
    raw: str,
) -> EngineOutcome:
    messages: list[str] = []
    index = 0
    while index < len(commands) and session.state is SessionState.AWAITING_REVIEW:
        command = commands[index]
        if is_structural(command):
            batch = []
            while index < len(commands) and is_structural(commands[index]):
                batch.append(commands[index])
                index += 1
            blocked = _apply_structural_batch(session, batch, backend, messages, pii_gate, raw)
            if blocked:
                break
        elif isinstance(command, Confirm):
            index += 1
            _confirm(session, backend, messages)
        elif isinstance(command, BiasCheck):
            index += 1
            _bias_check(session, command, backend, messages)
        elif isinstance(command, Export):
            index += 1
            document = export_session(session, command.format)
            session.record("Export", {"format": command.format.value})
            messages.append(document)
        else:
            index += 1
            assert isinstance(command, Freeform)
            session.pending_freeform = command.raw
            session.record("FreeformHeld", {"text": command.raw})
            messages.append(FREEFORM_PROMPT)

    if session.state is SessionState.AWAITING_REVIEW:
        messages.append(REVIEW_QUESTION)
    finished = session.state in (SessionState.DONE, SessionState.FAILED)
    return EngineOutcome(session, messages, finished)


def _apply_structural_batch(
    session: Session,
    batch: list[EditCommand],
    backend: CompletionBackend,
    messages: list[str],
    pii_gate: bool,
    raw: str,
) -> bool:
    """Apply one run of structural commands; returns True when held for override."""
    if pii_gate:
        warnings = []
        for command in batch:
            text = getattr(command, "text", None)
            if text:
                warnings.extend(_pii_warnings(session, text, "your edit"))
        if warnings:
            session.pending_override = raw
            messages.extend(warnings)
            messages.append(OVERRIDE_PROMPT)
            return True

    effective: list[EditCommand] = []
    for command in batch:
        if isinstance(command, Replace):
            try:
                existing = session.chain.step_by_ordinal(command.ordinal)
            except UnknownStepError:
                pass  # let apply_edit_sequence report it
            else:
                if existing.text == command.text.strip():
                    messages.append(
                        f"Step {command.ordinal} already reads exactly that; nothing changed."
                    )
                    continue
        effective.append(command)
    if not effective:
        return False

    before = session.chain
    try:
        after, _invalidated = apply_edit_sequence(before, effective)
    except UnknownStepError as exc:
        ordinal = exc.ordinal if exc.ordinal is not None else "?"
        messages.append(f"Step {ordinal} does not exist; nothing was changed.")
        return False
    except MergeNonAdjacentError as exc:
        messages.append(
            f"Steps {exc.first} and {exc.second} are not adjacent; "
            "only adjacent steps can be merged."
        )
        return False
    except EmptyReplacementTextError:
        messages.append("The replacement text is empty; nothing was changed.")
        return False

    summary = []
    for command in effective:
        if isinstance(command, Replace):
            messages.append(f"Updated Step {command.ordinal} acknowledged.")
            original = before.step_by_ordinal(command.ordinal)
            summary.append(
                {
                    "kind": "Replace",
                    "ordinal": command.ordinal,
                    "step_id": original.id,
                    "original": original.text,
                    "revision": command.text.strip(),
                }
            )
        elif isinstance(command, Delete):
            messages.append(f"Removed Step {command.ordinal} acknowledged.")
            summary.append({"kind": "Delete", "ordinal": command.ordinal})
        elif isinstance(command, Merge):
            messages.append(f"Merged Steps {command.first} and {command.second} acknowledged.")
            summary.append({"kind": "Merge", "first": command.first, "second": command.second})
        elif isinstance(command, Insert):
            place = "at the start" if command.after == 0 else f"after Step {command.after}"
            messages.append(f"Inserted a step {place} acknowledged.")
            summary.append({"kind": "Insert", "after": command.after, "text": command.text.strip()})

    session.chain = after
    session.record(
        "EditApplied", {"commands": summary, "chain": _chain_payload(session.chain)}
    )
    session.edit_turns += 1

    stale = session.chain.stale_steps()
    if stale:
        messages.append(f"Recalculating {format_step_list([s.ordinal for s in stale])}...")
        session.apply_event(SessionEvent.EDIT_APPLIED)
        watermark = len(session.transcript)
        try:
            regenerate_stale(session, backend)
        except StepchainError as exc:
            messages.extend(_messages_since(session, watermark))
            messages.append(f"Regeneration failed: {exc}")
            return False
        messages.extend(_messages_since(session, watermark))

    _record_replacements(session, summary)
    messages.append(render_chain(session.chain) or "(the chain is now empty)")
    return False


def _record_replacements(session: Session, summary: list[dict]) -> None:
    for item in summary:
        if item["kind"] != "Replace":
            continue
        record = EditRecord(
            session_id=session.id,
            step_id=item["step_id"],
            original=item["original"],
            revision=item["revision"],
            timestamp=len(session.transcript),
        )
        session.preferences = record_edit(session.edit_log, session.preferences, record)
        session.record(
            "EditRecorded",
            {"step_id": record.step_id, "original": record.original, "revision": record.revision},
        )


def _forward_freeform(session: Session, pending: str, backend: CompletionBackend) -> EngineOutcome:
    """Escalate a held freeform utterance: regenerate the steps it names."""
    messages: list[str] = []
    mentioned = sorted({int(m) for m in re.findall(r"step\s+(\d+)", pending, re.IGNORECASE)})
    live = [o for o in mentioned if o in set(session.chain.ordinals())]
    if not live:
        messages.append(
            'I could not find a step reference (like "Step 3") in that request; '
            "please restate it as an edit command."
        )
        messages.append(REVIEW_QUESTION)
        return EngineOutcome(session, messages, finished=False)

    ids = [session.chain.step_by_ordinal(o).id for o in live]
    originals = {sid: session.chain.step_by_id(sid).text for sid in ids}
    session.chain = mark_stale(session.chain, ids)
    session.record(
        "ForwardedFreeform",
        {"text": pending, "ordinals": live, "chain": _chain_payload(session.chain)},
    )
    session.edit_turns += 1
    messages.append("Request forwarded to the model.")
    messages.append(f"Recalculating {format_step_list(live)}...")
    session.apply_event(SessionEvent.EDIT_APPLIED)
    watermark = len(session.transcript)
    try:
        regenerate_stale(session, backend, guidance=pending)
    except StepchainError as exc:
        messages.extend(_messages_since(session, watermark))
        messages.append(f"Regeneration failed: {exc}")
        return EngineOutcome(session, messages, finished=True)
    messages.extend(_messages_since(session, watermark))
    # The targeted steps were revised at the user's request, so their accepted
    # texts count as user preference signal (cascade regenerations never do).
    summary = []
    for sid in ids:
        new_text = session.chain.step_by_id(sid).text
        if new_text != originals[sid]:
            summary.append(
                {
                    "kind": "Replace",
                    "step_id": sid,
                    "original": originals[sid],
                    "revision": new_text,
                }
            )
    _record_replacements(session, summary)
    messages.append(render_chain(session.chain))
    messages.append(REVIEW_QUESTION)
    return EngineOutcome(session, messages, finished=False)


def _confirm(session: Session, backend: CompletionBackend, messages: list[str]) -> None:
    if session.chain.is_empty():
        messages.append(
            "There is no reasoning chain to confirm. "
            'Add a step first (for example, "Insert at start: ...").'
        )
        return
    if session.chain.stale_steps():
        messages.append(
            "Some steps are still marked for regeneration and must be refreshed "
            "before the final answer."
        )
        return
    session.apply_event(SessionEvent.CONFIRM)
    watermark = len(session.transcript)
    try:
        answer = finalize(session, backend)
    except StepchainError as exc:
        messages.append(f"Finalization failed: {exc}")
        return
    messages.append(answer.disclosure.rendered)
    messages.append(answer.text)
    for event in session.transcript[watermark:]:
        if event.kind == "PiiWarning":
            messages.append(
                _format_pii_warning(
                    event.payload["kind"], event.payload["preview"], event.payload["where"]
                )
            )
    messages.append(EXPORT_OFFER)


def _bias_check(
    session: Session, command: BiasCheck, backend: CompletionBackend, messages: list[str]
) -> None:
    try:
        session.chain.step_by_ordinal(command.ordinal)
    except UnknownStepError:
        messages.append(f"Step {command.ordinal} does not exist; nothing was audited.")
        return
    bundle = render_prompt(
        session, PromptPurpose.BIAS_AUDIT, directives=(), targets=(command.ordinal,)
    )
    try:
        response, disclosure = _complete(session, backend, bundle)
    except StepchainError as exc:
        messages.append(f"Bias audit failed: {exc}")
        return
    reply = rerank(response.candidates, session.preferences)[0]
    session.record("BiasAudit", {"ordinal": command.ordinal, "reply": reply})
    messages.append(disclosure.rendered)
    messages.append(reply)


def _edit_history_lines(session: Session) -> list[str]:
    lines: list[str] = []
    counter = 0
    for event in session.transcript:
        if event.kind == "EditApplied":
            for item in event.payload["commands"]:
                counter += 1
                if item["kind"] == "Replace":
                    lines.append(
                        f'{counter}. Replaced Step {item["ordinal"]}: '
                        f'"{item["original"]}" -> "{item["revision"]}"'
                    )
                elif item["kind"] == "Delete":
                    lines.append(f'{counter}. Removed Step {item["ordinal"]}.')
                elif item["kind"] == "Merge":
                    lines.append(f'{counter}. Merged Steps {item["first"]} and {item["second"]}.')
                elif item["kind"] == "Insert":
                    place = "at the start" if item["after"] == 0 else f'after Step {item["after"]}'
                    lines.append(f'{counter}. Inserted a step {place}: "{item["text"]}"')
        elif event.kind == "ForwardedFreeform":
            counter += 1
            names = format_step_list(event.payload["ordinals"])
            lines.append(f'{counter}. Forwarded to the model ({names}): "{event.payload["text"]}"')
    return lines
