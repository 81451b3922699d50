"""Transparency and privacy safeguards: disclosures, bias audits, PII scans."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .chain import ReasoningStep
from .backends import ModelMetadata


class PiiKind(Enum):
    EMAIL = "Email"
    PHONE_NUMBER = "PhoneNumber"
    NATIONAL_ID = "NationalId"
    PAYMENT_CARD = "PaymentCard"


PII_KIND_LABELS = {
    PiiKind.EMAIL: "email address",
    PiiKind.PHONE_NUMBER: "phone number",
    PiiKind.NATIONAL_ID: "national id number",
    PiiKind.PAYMENT_CARD: "payment card number",
}


@dataclass(frozen=True)
class PiiFinding:
    kind: PiiKind
    start: int
    end: int
    preview: str  # all but the last two characters masked


# local@domain.tld; requires a dotted alphabetic TLD so "user@host" stays out.
_EMAIL_RE = re.compile(
    r"(?<![A-Za-z0-9._%+-])[A-Za-z0-9._%+-]+@"
    r"[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}(?![A-Za-z0-9-])"
)

# North-American 10-digit shapes, separator-delimited (dots, dashes, spaces,
# or a parenthesized area code), with an optional +1/1 prefix.  A bare
# 10-digit run is deliberately not a phone number.
_PHONE_RE = re.compile(
    r"(?<!\d)(?:\+?1[-. ])?(?:\(\d{3}\)[-. ]?|\d{3}[-. ])\d{3}[-. ]\d{4}(?!\d)"
)

_NATIONAL_ID_RE = re.compile(r"(?<![\d-])\d{3}-\d{2}-\d{4}(?![\d-])")

# 13-16 digits with optional single space/dash separators; Luhn-checked below.
_CARD_RE = re.compile(r"(?<![\dA-Za-z])\d(?:[ -]?\d){12,15}(?![\dA-Za-z])")


def luhn_valid(digits: str) -> bool:
    total = 0
    for index, char in enumerate(reversed(digits)):
        value = int(char)
        if index % 2 == 1:
            value *= 2
            if value > 9:
                value -= 9
        total += value
    return total % 10 == 0


def mask_preview(value: str) -> str:
    """Mask all but the last two characters (everything, for tiny values)."""
    if len(value) <= 2:
        return "*" * len(value)
    return "*" * (len(value) - 2) + value[-2:]


def detect_pii(text: str) -> list[PiiFinding]:
    """Scan for the four pattern-detectable kinds; deterministic, ordered by span.

    Overlapping findings are allowed; ordering is (start, end, kind name).
    """
    findings: list[PiiFinding] = []

    def add(kind: PiiKind, start: int, end: int) -> None:
        value = text[start:end]
        findings.append(PiiFinding(kind=kind, start=start, end=end, preview=mask_preview(value)))

    for match in _EMAIL_RE.finditer(text):
        add(PiiKind.EMAIL, match.start(), match.end())
    for match in _PHONE_RE.finditer(text):
        add(PiiKind.PHONE_NUMBER, match.start(), match.end())
    for match in _NATIONAL_ID_RE.finditer(text):
        add(PiiKind.NATIONAL_ID, match.start(), match.end())
    for match in _CARD_RE.finditer(text):
        digits = re.sub(r"[ -]", "", match.group(0))
        if 13 <= len(digits) <= 16 and luhn_valid(digits):
            add(PiiKind.PAYMENT_CARD, match.start(), match.end())

    findings.sort(key=lambda f: (f.start, f.end, f.kind.value))
    return findings


@dataclass(frozen=True)
class Disclosure:
    """What the user is told about every model call."""

    model_version: str
    parameters: dict
    confidence: float | None
    rendered: str


def build_disclosure(metadata: ModelMetadata) -> Disclosure:
    """Render the fixed disclosure block: version, sorted parameters, confidence.

    The confidence line appears exactly when confidence is present.
    """
    if metadata.parameters:
        params = ", ".join(f"{key}={metadata.parameters[key]}" for key in sorted(metadata.parameters))
    else:
        params = "(none)"
    lines = [
        "Model disclosure:",
        f"version: {metadata.model_version}",
        f"parameters: {params}",
    ]
    if metadata.confidence is not None:
        lines.append(f"confidence: {metadata.confidence}")
    return Disclosure(
        model_version=metadata.model_version,
        parameters=dict(metadata.parameters),
        confidence=metadata.confidence,
        rendered="\n".join(lines),
    )


def build_bias_prompt(step: ReasoningStep) -> str:
    """Audit instruction embedding the step verbatim (whitespace-trimmed)."""
    text = step.text.strip()
    return (
        "You previously produced this reasoning step:\n\n"
        f"[Step {step.ordinal}] {text}\n\n"
        f"Is there any bias in Step {step.ordinal}? Examine it for biased framing, "
        "unstated value judgments, or unrepresentative evidence; then self-audit or "
        "reframe the logic of the step and report what, if anything, should change."
    )
