"""Text protocol: parse model output into chains, user utterances into
commands, and sessions back into prompts.

Everything here is a pure function.  The step-block format ("[Step N] text",
blocks separated by one blank line, markers recognized at line start only) is
the package's canonical wire format for chains; exports and fixtures rely on
it being bit-exact under render -> parse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Sequence

from .chain import ReasoningChain, new_chain
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
    Scope,
)
from .errors import (
    DuplicateOrdinalError,
    NoStepsFoundError,
    NonIncreasingOrdinalsError,
    PurposeStateMismatchError,
)
from .safeguards import build_bias_prompt

if TYPE_CHECKING:
    from .session import Session


SYSTEM_PROMPT = """You are an Interactive Reasoning Assistant designed to guide users through a transparent, multi-step reasoning process.

Your goal is to expose your chain-of-thought reasoning in numbered steps and allow the user to review and modify any step before you generate a final answer.

You must follow this exact workflow:

1. Generate a clear, step-by-step reasoning chain (label each with [Step 1], [Step 2], etc.).
2. Present the full reasoning chain to the user and ask if they would like to edit, delete, or replace any step.
3. If the user provides an edit:
 - Acknowledge the edit.
 - Update the modified step.
 - Automatically re-calculate any logically dependent downstream steps.
 - Show the updated reasoning chain.
 - Ask if further changes are needed.
4. If the user confirms the chain (e.g., says "Continue"), proceed to generate the final answer based strictly on the most recent version of the reasoning chain.

Important constraints:

- Never finalize an answer until the user explicitly confirms the reasoning chain.
- Always number steps and allow edits by number (e.g., "Replace Step 3 with...").
- When updating the chain, only modify what logically depends on the user's change.
- Encourage critical review with language such as: "Would you like to revise or reframe any of these steps?"

Do not assume the user wants to continue unless they clearly state so.

At the end, optionally offer to export the reasoning chain and final answer."""


class PromptPurpose(Enum):
    INITIAL_DRAFT = "InitialDraft"
    REGENERATE_STALE = "RegenerateStale"
    FINAL_ANSWER = "FinalAnswer"
    BIAS_AUDIT = "BiasAudit"


@dataclass(frozen=True)
class PromptBundle:
    """Everything one completion request needs, plus its scripted-replay key."""

    system: str
    context: str
    instruction: str
    directives: tuple[str, ...]
    purpose: PromptPurpose
    targets: tuple[int, ...]  # stale ordinals, or the audited ordinal
    turn: int  # edit count at request time

    def user_text(self) -> str:
        parts = [self.context, self.instruction]
        if self.directives:
            notes = "\n".join(f"{i}. {line}" for i, line in enumerate(self.directives, 1))
            parts.append("Style notes:\n" + notes)
        return "\n\n".join(parts)


_MARKER_RE = re.compile(r"^\[Step (\d+)\][ \t]?", flags=re.MULTILINE)


def parse_chain(text: str) -> ReasoningChain:
    """Extract "[Step N]" blocks from raw model output into a chain.

    Markers count only at line start; a "[Step 7]" mid-sentence stays inside
    its step.  Ordinals are taken verbatim (gaps fine, strict increase
    required).  Prose outside the markers is discarded here; callers keep the
    raw reply in the transcript.
    """
    matches = list(_MARKER_RE.finditer(text))
    if not matches:
        raise NoStepsFoundError("no [Step N] markers at line start")
    items: list[tuple[int, str]] = []
    for index, match in enumerate(matches):
        ordinal = int(match.group(1))
        end = matches[index + 1].start() if index + 1 < len(matches) else len(text)
        items.append((ordinal, text[match.end() : end].strip()))
    ordinals = [ordinal for ordinal, _ in items]
    for previous, current in zip(ordinals, ordinals[1:]):
        if current == previous:
            raise DuplicateOrdinalError(f"ordinal {current} repeats")
        if current < previous:
            raise NonIncreasingOrdinalsError(f"ordinal {current} follows {previous}")
    return new_chain(items)


def render_chain(chain: ReasoningChain) -> str:
    """Canonical form: one "[Step N] text" block per step, one blank line between."""
    return "\n\n".join(f"[Step {step.ordinal}] {step.text}" for step in chain.steps)


def format_step_list(ordinals: Sequence[int]) -> str:
    """"Step 7" / "Steps 3 and 4" / "Steps 5, 6 and 7"."""
    labels = [str(o) for o in ordinals]
    if not labels:
        return "no steps"
    if len(labels) == 1:
        return f"Step {labels[0]}"
    return "Steps " + ", ".join(labels[:-1]) + " and " + labels[-1]


# -- command grammar ---------------------------------------------------------

_REPLACE_RE = re.compile(
    r"^\s*replace\s+(only\s+)?step\s+(\d+)\s+with\s*:?\s+(.+?)\s*$", re.I | re.S
)
_DELETE_RE = re.compile(r"^\s*(?:delete|remove)\s+(only\s+)?step\s+(\d+)\s*[.!]*\s*$", re.I)
_MERGE_RE = re.compile(
    r"^\s*merge\s+(only\s+)?steps\s+(\d+)\s+and\s+(\d+)\s*[.!]*\s*$", re.I
)
_INSERT_RE = re.compile(
    r"^\s*insert\s+(?:after\s+step\s+(\d+)|at\s+(start))\s*:?\s+(.+?)\s*$", re.I | re.S
)
_BIAS_RE = re.compile(r"^\s*is\s+there\s+any\s+bias\s+in\s+step\s+(\d+)\s*[?.!]*\s*$", re.I)
_EXPORT_RE = re.compile(r"^\s*export(?:\s+as\s+(markdown|json))?\s*[.!]*\s*$", re.I)
_CONFIRM_RE = re.compile(r"^\s*(?:continue|proceed|looks\s+good)\b", re.I)

# Words that can open a recognized clause; used to decide where a compound
# utterance may split on " and ".
_CLAUSE_OPENER_RE = re.compile(
    r"^\s*(?:replace|delete|remove|merge|insert|export|is\s+there\s+any\s+bias"
    r"|continue|proceed|looks\s+good)\b",
    re.I,
)


def _parse_single(clause: str, default_scope: Scope) -> EditCommand | None:
    match = _REPLACE_RE.match(clause)
    if match:
        scope = Scope.LOCAL if match.group(1) else default_scope
        return Replace(ordinal=int(match.group(2)), text=match.group(3), scope=scope)
    match = _DELETE_RE.match(clause)
    if match:
        scope = Scope.LOCAL if match.group(1) else default_scope
        return Delete(ordinal=int(match.group(2)), scope=scope)
    match = _MERGE_RE.match(clause)
    if match:
        scope = Scope.LOCAL if match.group(1) else default_scope
        return Merge(first=int(match.group(2)), second=int(match.group(3)), scope=scope)
    match = _INSERT_RE.match(clause)
    if match:
        after = 0 if match.group(2) else int(match.group(1))
        return Insert(after=after, text=match.group(3), scope=default_scope)
    match = _BIAS_RE.match(clause)
    if match:
        return BiasCheck(ordinal=int(match.group(1)))
    match = _EXPORT_RE.match(clause)
    if match:
        fmt = ExportFormat.JSON if (match.group(1) or "").lower() == "json" else ExportFormat.MARKDOWN
        return Export(format=fmt)
    if _CONFIRM_RE.match(clause):
        return Confirm()
    return None


def parse_command(text: str, default_scope: Scope = Scope.CASCADE) -> list[EditCommand]:
    """Map an utterance to an ordered command list; Freeform is the catch-all.

    A whole-utterance parse wins over splitting, so replacement text may
    contain " and ".  Otherwise the utterance splits on the literal " and "
    wherever both sides parse as recognized clauses ("Remove Step 1 and merge
    Steps 2 and 3." -> [Delete(1), Merge(2, 3)]).  Anything unrecognized
    comes back as a single Freeform carrying the raw text.
    """
    single = _parse_single(text, default_scope)
    if single is not None:
        return [single]

    segments = text.split(" and ")
    if len(segments) > 1:
        commands: list[EditCommand] = []
        buffer = segments[0]
        for segment in segments[1:]:
            parsed = _parse_single(buffer, default_scope)
            if parsed is not None and _CLAUSE_OPENER_RE.match(segment):
                commands.append(parsed)
                buffer = segment
            else:
                buffer = buffer + " and " + segment
        last = _parse_single(buffer, default_scope)
        if last is not None and commands:
            commands.append(last)
            return commands

    return [Freeform(raw=text)]


# -- prompt assembly ---------------------------------------------------------

_PURPOSE_STATES = {
    PromptPurpose.INITIAL_DRAFT: "Drafting",
    PromptPurpose.REGENERATE_STALE: "Regenerating",
    PromptPurpose.FINAL_ANSWER: "Finalizing",
    PromptPurpose.BIAS_AUDIT: "AwaitingReview",
}


def render_prompt(
    session: "Session",
    purpose: PromptPurpose,
    directives: Sequence[str] = (),
    targets: Sequence[int] = (),
    guidance: str | None = None,
) -> PromptBundle:
    """Assemble the completion request for one engine purpose.

    The system text is always the embedded assistant template.  Context is
    the query plus the current chain; the instruction varies by purpose, and
    for stale regeneration it names exactly the ordinals to re-emit.
    """
    if session.state.value != _PURPOSE_STATES[purpose]:
        raise PurposeStateMismatchError(
            f"{purpose.value} is not allowed in state {session.state.value}"
        )

    chain_text = render_chain(session.chain) or "(no steps yet)"
    context = f"User query: {session.query}\n\nCurrent reasoning chain:\n\n{chain_text}"

    if purpose is PromptPurpose.INITIAL_DRAFT:
        instruction = (
            "Generate a clear, step-by-step reasoning chain for the query. "
            "Label each step at the start of its own line as [Step 1], [Step 2], "
            "and so on. Do not give a final answer yet."
        )
    elif purpose is PromptPurpose.REGENERATE_STALE:
        names = format_step_list(targets)
        instruction = (
            f"Regenerate only {names}. Re-emit each regenerated step with its "
            "original label at the start of its own line. Leave every other step "
            "exactly as it is; do not renumber, add, or drop steps."
        )
        if guidance:
            instruction += f"\n\nThe user asked: {guidance}"
    elif purpose is PromptPurpose.FINAL_ANSWER:
        instruction = (
            "The user has confirmed the reasoning chain. Generate the final "
            "answer based strictly on the most recent version of the reasoning "
            "chain above."
        )
    else:  # BIAS_AUDIT
        step = session.chain.step_by_ordinal(targets[0])
        instruction = build_bias_prompt(step)

    return PromptBundle(
        system=SYSTEM_PROMPT,
        context=context,
        instruction=instruction,
        directives=tuple(directives),
        purpose=purpose,
        targets=tuple(targets),
        turn=session.edit_turns,
    )
