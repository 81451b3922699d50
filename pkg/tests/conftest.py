from __future__ import annotations

import pytest

from stepchain import ScriptedBackend, ScriptEntry


def scripted(entries: dict[tuple[str, tuple[int, ...], int], list[str] | tuple], **confidences):
    """Build a ScriptedBackend from {key: candidates} with optional per-key confidence."""
    built = {}
    for key, candidates in entries.items():
        if isinstance(candidates, ScriptEntry):
            built[key] = candidates
        else:
            built[key] = ScriptEntry(candidates=tuple(candidates), confidence=confidences.get("confidence"))
    return ScriptedBackend(built)


FOUR_STEP_DRAFT = "[Step 1] First point.\n\n[Step 2] Second point.\n\n[Step 3] Third point.\n\n[Step 4] Fourth point."


@pytest.fixture
def four_step_backend():
    return scripted(
        {
            ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
            ("RegenerateStale", (3, 4), 1): ["[Step 3] Third, recomputed.\n\n[Step 4] Fourth, recomputed."],
            ("FinalAnswer", (), 0): ["Answer from the untouched chain."],
            ("FinalAnswer", (), 1): ["Answer from the edited chain."],
        }
    )
