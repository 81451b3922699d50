"""Structured user intent: the command vocabulary for steering a session."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Scope(Enum):
    """How far an edit's invalidation reaches."""

    CASCADE = "Cascade"  # all graph descendants of the edited steps
    LOCAL = "Local"  # the edited steps only, nothing downstream


class ExportFormat(Enum):
    MARKDOWN = "Markdown"
    JSON = "Json"


@dataclass(frozen=True)
class Replace:
    """Swap a step's text for user-authored text."""

    ordinal: int
    text: str
    scope: Scope = Scope.CASCADE


@dataclass(frozen=True)
class Delete:
    ordinal: int
    scope: Scope = Scope.CASCADE


@dataclass(frozen=True)
class Merge:
    """Fuse two adjacent steps into one (earlier position wins)."""

    first: int
    second: int
    scope: Scope = Scope.CASCADE


@dataclass(frozen=True)
class Insert:
    """Add a user-authored step after the given ordinal (0 = at the head)."""

    after: int
    text: str
    scope: Scope = Scope.CASCADE


@dataclass(frozen=True)
class Confirm:
    """Explicit approval of the current chain; unlocks finalization."""


@dataclass(frozen=True)
class BiasCheck:
    ordinal: int


@dataclass(frozen=True)
class Export:
    format: ExportFormat = ExportFormat.MARKDOWN


@dataclass(frozen=True)
class Freeform:
    """Unrecognized utterance, kept verbatim for explicit escalation."""

    raw: str


StructuralCommand = Replace | Delete | Merge | Insert
EditCommand = StructuralCommand | Confirm | BiasCheck | Export | Freeform


def is_structural(command: EditCommand) -> bool:
    return isinstance(command, (Replace, Delete, Merge, Insert))
