"""Learning a user's revision style from their edits.

Every accepted replacement is logged as an (original, revision) pair.  The
difference between the two texts' style features nudges an exponentially
weighted preference vector; that vector then reranks sampled completions and,
when a component grows strong enough, turns into a fixed prompt directive.
Recent edits dominate older ones at rate (1 - alpha) per update.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import FixtureSchemaError, IdenticalTextsError

FEATURE_COUNT = 6
FEATURE_NAMES = (
    "length",
    "counterexample",
    "assumption",
    "hedging",
    "question",
    "evidence",
)

# Fixed marker lexicons.  Matching happens in token space, so multi-word
# entries match consecutive tokens and "e.g." matches its tokenized form.
COUNTEREXAMPLE_MARKERS = ("counterexample", "however", "but", "instead", "unless")
ASSUMPTION_MARKERS = ("assume", "assumes", "suppose", "presumably", "given that")
HEDGING_MARKERS = ("may", "might", "could", "possibly", "perhaps")
EVIDENCE_MARKERS = ("e.g.", "for example", "such as", "studies", "evidence")

FeatureVector = tuple[float, ...]

ZERO_FEATURES: FeatureVector = (0.0,) * FEATURE_COUNT


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace split with trailing punctuation stripped."""
    tokens = []
    for raw in text.lower().split():
        token = raw.rstrip(string.punctuation)
        if token:
            tokens.append(token)
    return tokens


def _phrase_occurrences(tokens: Sequence[str], phrase: Sequence[str]) -> int:
    if not phrase or len(phrase) > len(tokens):
        return 0
    width = len(phrase)
    count = 0
    index = 0
    while index <= len(tokens) - width:
        if tuple(tokens[index : index + width]) == tuple(phrase):
            count += 1
            index += width
        else:
            index += 1
    return count


def _marker_density(tokens: Sequence[str], lexicon: Sequence[str]) -> float:
    if not tokens:
        return 0.0
    hits = sum(_phrase_occurrences(tokens, tokenize(entry)) for entry in lexicon)
    return min(1.0, hits / len(tokens))


def extract_features(text: str) -> FeatureVector:
    """Six style features, each in [0, 1]; empty text maps to the zero vector.

    f1 length (tokens/100, capped), f2 counterexample density, f3 assumption
    density, f4 hedging density, f5 question density ("?" per token), and
    f6 evidence density.  Densities are marker fraction of tokens, capped.
    """
    tokens = tokenize(text)
    if not tokens:
        return ZERO_FEATURES
    return (
        min(1.0, len(tokens) / 100.0),
        _marker_density(tokens, COUNTEREXAMPLE_MARKERS),
        _marker_density(tokens, ASSUMPTION_MARKERS),
        _marker_density(tokens, HEDGING_MARKERS),
        min(1.0, text.count("?") / len(tokens)),
        _marker_density(tokens, EVIDENCE_MARKERS),
    )


@dataclass(frozen=True)
class EditRecord:
    """One logged (original step, user revision) pair."""

    session_id: str
    step_id: int
    original: str
    revision: str
    timestamp: int  # logical clock (transcript sequence number)

    def __post_init__(self) -> None:
        if self.original == self.revision:
            raise IdenticalTextsError("original and revision are identical")


@dataclass(frozen=True)
class PreferenceVector:
    """Online EWMA over feature deltas; components clamped to [-1, 1]."""

    p: FeatureVector = ZERO_FEATURES
    update_count: int = 0
    alpha: float = 0.3

    def score(self, features: FeatureVector) -> float:
        return sum(weight * value for weight, value in zip(self.p, features))


def record_edit(
    log: list[EditRecord], pref: PreferenceVector, record: EditRecord
) -> PreferenceVector:
    """Append the record and fold its feature delta into the preferences."""
    if record.original == record.revision:
        raise IdenticalTextsError("original and revision are identical")
    log.append(record)
    delta = tuple(
        rev - orig
        for rev, orig in zip(extract_features(record.revision), extract_features(record.original))
    )
    alpha = pref.alpha
    updated = tuple(
        max(-1.0, min(1.0, (1.0 - alpha) * weight + alpha * change))
        for weight, change in zip(pref.p, delta)
    )
    return PreferenceVector(p=updated, update_count=pref.update_count + 1, alpha=alpha)


def rerank(candidates: Sequence[str], pref: PreferenceVector) -> list[str]:
    """Stable descending sort of candidates by preference score.

    Ties (including the all-zero preference case) keep their input order, so
    the output is always a permutation of the input.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    return sorted(candidates, key=lambda text: -pref.score(extract_features(text)))


# Directive lines keyed by (feature index, sign of the learned weight).
DIRECTIVE_TABLE: dict[tuple[int, int], str] = {
    (0, +1): "Develop each step fully rather than compressing it.",
    (0, -1): "Keep each step brief and to the point.",
    (1, +1): "Prefer concrete counterexamples over unexamined assumptions.",
    (1, -1): "Favor the main line of argument over digressions into counterexamples.",
    (2, +1): "State working assumptions explicitly before building on them.",
    (2, -1): "Avoid introducing unexamined assumptions.",
    (3, +1): "Acknowledge uncertainty where the evidence is genuinely mixed.",
    (3, -1): "Avoid hedging; state the strongest supported conclusion.",
    (4, +1): "Use guiding questions to frame each step.",
    (4, -1): "State conclusions directly instead of posing rhetorical questions.",
    (5, +1): "Ground claims in concrete examples or evidence.",
    (5, -1): "Keep steps conceptual; avoid example lists.",
}


def synthesize_directives(pref: PreferenceVector, theta: float = 0.25) -> list[str]:
    """Fixed directive lines for every component with |p_i| > theta.

    At most one line per feature, ordered by feature index.
    """
    lines = []
    for index, weight in enumerate(pref.p):
        if abs(weight) > theta:
            lines.append(DIRECTIVE_TABLE[(index, 1 if weight > 0 else -1)])
    return lines


EDIT_LOG_SCHEMA_VERSION = 1


def save_edit_log(records: Sequence[EditRecord], path: str | Path) -> None:
    """Persist records as JSON lines, one schema-versioned object per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(
                json.dumps(
                    {
                        "v": EDIT_LOG_SCHEMA_VERSION,
                        "session_id": record.session_id,
                        "step_id": record.step_id,
                        "original": record.original,
                        "revision": record.revision,
                        "timestamp": record.timestamp,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_edit_log(path: str | Path) -> list[EditRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FixtureSchemaError(f"line {line_number}: not valid JSON") from exc
            if data.get("v") != EDIT_LOG_SCHEMA_VERSION:
                raise FixtureSchemaError(f"line {line_number}: unsupported schema version")
            records.append(
                EditRecord(
                    session_id=data["session_id"],
                    step_id=data["step_id"],
                    original=data["original"],
                    revision=data["revision"],
                    timestamp=data["timestamp"],
                )
            )
    return records
