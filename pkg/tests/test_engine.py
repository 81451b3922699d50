"""Engine orchestration: the full draft/review/edit/regenerate/confirm loop."""

from __future__ import annotations

import pytest

from stepchain import (
    EXPORT_OFFER,
    EchoBackend,
    ExportFormat,
    FREEFORM_PROMPT,
    REVIEW_QUESTION,
    SessionConfig,
    SessionState,
    StepStatus,
    export_session,
    finalize,
    handle_utterance,
    regenerate_stale,
    start_session,
)
from stepchain.errors import (
    EmptyChainError,
    EmptyQueryError,
    IllegalTransitionError,
    NoStaleStepsError,
    StaleStepsRemainError,
)
from stepchain.session import SessionEvent

from conftest import FOUR_STEP_DRAFT, scripted


def start(backend, **config_kwargs):
    return start_session("test query", SessionConfig(**config_kwargs), backend)


class TestStartSession:
    def test_draft_enters_review(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        assert session.state is SessionState.AWAITING_REVIEW
        assert session.chain.ordinals() == [1, 2, 3, 4]
        assert not outcome.finished
        assert outcome.messages[0].startswith("Model disclosure:")
        assert outcome.messages[1] == FOUR_STEP_DRAFT
        assert outcome.messages[-1] == REVIEW_QUESTION

    def test_empty_query_rejected(self, four_step_backend):
        with pytest.raises(EmptyQueryError):
            start_session("   ", SessionConfig(), four_step_backend)

    def test_markerless_draft_fails_after_one_retry(self):
        backend = scripted({("InitialDraft", (), 0): ["prose without any markers"]})
        outcome = start(backend)
        assert outcome.session.state is SessionState.FAILED
        assert outcome.finished
        # two model calls happened: the draft and the automatic re-prompt
        disclosures = [e for e in outcome.session.transcript if e.kind == "Disclosure"]
        assert len(disclosures) == 2

    def test_query_is_immutable_and_transcript_grows(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        before = len(session.transcript)
        handle_utterance(session, "tell me something", four_step_backend)
        assert session.query == "test query"
        assert len(session.transcript) > before


class TestStructuralEdits:
    def test_replace_regenerates_descendants(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        step1_before = session.chain.step_by_ordinal(1).text
        outcome = handle_utterance(
            session, "Replace Step 2 with: Assume X leads to Z instead.", four_step_backend
        )
        assert outcome.messages[0] == "Updated Step 2 acknowledged."
        assert outcome.messages[1] == "Recalculating Steps 3 and 4..."
        assert outcome.messages[-1] == REVIEW_QUESTION
        assert session.state is SessionState.AWAITING_REVIEW
        chain = session.chain
        assert chain.step_by_ordinal(2).text == "Assume X leads to Z instead."
        assert chain.step_by_ordinal(3).text == "Third, recomputed."
        assert chain.step_by_ordinal(4).text == "Fourth, recomputed."
        assert chain.step_by_ordinal(1).text == step1_before  # byte-identical
        assert chain.stale_steps() == []

    def test_unknown_step_leaves_state_unchanged(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        chain_before = session.chain
        outcome = handle_utterance(session, "Replace Step 99 with: x", four_step_backend)
        assert "Step 99 does not exist" in outcome.messages[0]
        assert outcome.messages[-1] == REVIEW_QUESTION
        assert session.state is SessionState.AWAITING_REVIEW
        assert session.chain == chain_before

    def test_identity_replace_is_noop(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        outcome = handle_utterance(
            session, "Replace Step 2 with: Second point.", four_step_backend
        )
        assert "nothing changed" in outcome.messages[0]
        assert session.chain.step_by_ordinal(3).text == "Third point."
        assert session.edit_turns == 0

    def test_local_scope_regenerates_nothing(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        outcome = handle_utterance(
            session, "Replace only Step 2 with: narrower claim", four_step_backend
        )
        assert session.chain.step_by_ordinal(2).text == "narrower claim"
        assert session.chain.step_by_ordinal(3).text == "Third point."
        assert session.chain.stale_steps() == []
        # no regeneration call was made: only the draft disclosure exists
        assert len([e for e in session.transcript if e.kind == "Disclosure"]) == 1

    def test_edit_records_logged_for_replace_only(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        handle_utterance(
            session, "Replace Step 2 with: Assume X leads to Z instead.", four_step_backend
        )
        assert len(session.edit_log) == 1
        record = session.edit_log[0]
        assert record.original == "Second point."
        assert record.revision == "Assume X leads to Z instead."
        assert session.preferences.update_count == 1

    def test_delete_and_merge_compound(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): ["[Step 1] a\n\n[Step 2] b\n\n[Step 3] c"],
                ("RegenerateStale", (1,), 1): ["[Step 1] merged and refreshed"],
            }
        )
        outcome = start(backend)
        session = outcome.session
        outcome = handle_utterance(
            session, "Remove Step 1 and merge Steps 2 and 3.", backend
        )
        assert "Removed Step 1 acknowledged." in outcome.messages
        assert "Merged Steps 2 and 3 acknowledged." in outcome.messages
        assert session.chain.ordinals() == [1]
        assert session.chain.steps[0].text == "b\n\nc"
        assert session.edit_log == []  # no Replace happened


class TestFreeformAndForward:
    def test_freeform_prompts_for_restatement(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        outcome = handle_utterance(session, "tell me a joke", four_step_backend)
        assert outcome.messages == [FREEFORM_PROMPT, REVIEW_QUESTION]
        assert session.pending_freeform == "tell me a joke"
        assert session.state is SessionState.AWAITING_REVIEW

    def test_forward_regenerates_only_mentioned_step(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("RegenerateStale", (3,), 1): ["[Step 3] Third, expanded per request."],
            }
        )
        outcome = start(backend)
        session = outcome.session
        handle_utterance(session, "Could we expand Step 3 with more detail?", backend)
        outcome = handle_utterance(session, "forward", backend)
        assert "Request forwarded to the model." in outcome.messages
        assert "Recalculating Step 3..." in outcome.messages
        chain = session.chain
        assert chain.step_by_ordinal(3).text == "Third, expanded per request."
        for ordinal in (1, 2, 4):
            assert chain.step_by_ordinal(ordinal).status is not StepStatus.STALE
        assert chain.step_by_ordinal(4).text == "Fourth point."  # untouched

    def test_forward_without_step_reference_asks_again(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        handle_utterance(session, "make it all better somehow", four_step_backend)
        outcome = handle_utterance(session, "forward", four_step_backend)
        assert "could not find a step reference" in outcome.messages[0]
        assert session.state is SessionState.AWAITING_REVIEW

    def test_other_reply_drops_pending_freeform(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        handle_utterance(session, "please polish things", four_step_backend)
        outcome = handle_utterance(session, "Replace Step 99 with: x", four_step_backend)
        assert session.pending_freeform is None
        assert "Step 99 does not exist" in outcome.messages[0]

    def test_forward_logs_the_targeted_step_as_an_edit(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("RegenerateStale", (3,), 1): ["[Step 3] Third, expanded per request."],
            }
        )
        outcome = start(backend)
        session = outcome.session
        handle_utterance(session, "Could we expand Step 3 with more detail?", backend)
        handle_utterance(session, "forward", backend)
        assert len(session.edit_log) == 1
        record = session.edit_log[0]
        assert record.original == "Third point."
        assert record.revision == "Third, expanded per request."
        assert session.preferences.update_count == 1

    def test_forward_guidance_reaches_prompt(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("RegenerateStale", (3,), 1): ["[Step 3] refreshed"],
            }
        )
        outcome = start(backend)
        session = outcome.session
        handle_utterance(session, "Could we expand Step 3 with examples?", backend)
        handle_utterance(session, "forward", backend)
        forwarded = [e for e in session.transcript if e.kind == "ForwardedFreeform"]
        assert forwarded and forwarded[0].payload["ordinals"] == [3]


class TestConfirmAndFinalize:
    def test_confirm_without_edits(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        outcome = handle_utterance(session, "Continue", four_step_backend)
        assert session.state is SessionState.DONE
        assert outcome.finished
        assert outcome.messages[-1] == EXPORT_OFFER
        assert outcome.messages[-2] == "Answer from the untouched chain."
        assert session.final_answer is not None
        assert session.final_answer.chain_snapshot.stale_steps() == []

    def test_looks_good_proceeds(self, four_step_backend):
        outcome = start(four_step_backend)
        outcome = handle_utterance(
            outcome.session, "Looks good. Proceed to final answer.", four_step_backend
        )
        assert outcome.session.state is SessionState.DONE

    def test_utterance_after_done_rejected(self, four_step_backend):
        outcome = start(four_step_backend)
        handle_utterance(outcome.session, "Continue", four_step_backend)
        with pytest.raises(IllegalTransitionError):
            handle_utterance(outcome.session, "Continue", four_step_backend)

    def test_confirm_on_empty_chain_refused(self):
        backend = scripted({("InitialDraft", (), 0): ["[Step 1] only step"]})
        outcome = start(backend)
        session = outcome.session
        handle_utterance(session, "delete step 1", backend)
        assert session.chain.is_empty()
        outcome = handle_utterance(session, "Continue", backend)
        assert session.state is SessionState.AWAITING_REVIEW
        assert "no reasoning chain to confirm" in outcome.messages[0]

    def test_finalize_requires_finalizing_state(self, four_step_backend):
        outcome = start(four_step_backend)
        with pytest.raises(IllegalTransitionError):
            finalize(outcome.session, four_step_backend)

    def test_finalize_rejects_stale_steps(self, four_step_backend):
        from stepchain.chain import mark_stale

        outcome = start(four_step_backend)
        session = outcome.session
        session.chain = mark_stale(session.chain, [session.chain.step_by_ordinal(3).id])
        session.apply_event(SessionEvent.CONFIRM)
        with pytest.raises(StaleStepsRemainError):
            finalize(session, four_step_backend)

    def test_finalize_rejects_empty_chain(self):
        backend = scripted({("InitialDraft", (), 0): ["[Step 1] only step"]})
        outcome = start(backend)
        session = outcome.session
        handle_utterance(session, "delete step 1", backend)
        session.apply_event(SessionEvent.CONFIRM)
        with pytest.raises(EmptyChainError):
            finalize(session, backend)


class TestRegenerateStale:
    def test_requires_regenerating_state(self, four_step_backend):
        outcome = start(four_step_backend)
        with pytest.raises(IllegalTransitionError):
            regenerate_stale(outcome.session, four_step_backend)

    def test_requires_stale_steps(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        session.apply_event(SessionEvent.EDIT_APPLIED)
        with pytest.raises(NoStaleStepsError):
            regenerate_stale(session, four_step_backend)

    def test_one_call_per_contiguous_block(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("RegenerateStale", (1,), 1): ["[Step 1] First, refreshed."],
                ("RegenerateStale", (3,), 1): ["[Step 3] Third, refreshed."],
            }
        )
        outcome = start(backend)
        session = outcome.session
        handle_utterance(session, "Please rework step 1 and step 3 together", backend)
        handle_utterance(session, "forward", backend)
        assert session.chain.step_by_ordinal(1).text == "First, refreshed."
        assert session.chain.step_by_ordinal(3).text == "Third, refreshed."
        assert session.chain.step_by_ordinal(2).text == "Second point."
        # draft + two block calls
        assert len([e for e in session.transcript if e.kind == "Disclosure"]) == 3

    def test_wrong_steps_fail_after_one_reprompt(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("RegenerateStale", (3, 4), 1): ["[Step 9] wrong ordinal"],
            }
        )
        outcome = start(backend)
        session = outcome.session
        outcome = handle_utterance(session, "Replace Step 2 with: changed.", backend)
        assert session.state is SessionState.FAILED
        assert outcome.finished
        assert any("Regeneration failed" in m for m in outcome.messages)
        # draft call + two regeneration attempts
        assert len([e for e in session.transcript if e.kind == "Disclosure"]) == 3


class TestPiiGate:
    def test_edit_with_pii_is_held_until_override(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("RegenerateStale", (3, 4), 1): [
                    "[Step 3] Third, recomputed.\n\n[Step 4] Fourth, recomputed."
                ],
            }
        )
        outcome = start(backend)
        session = outcome.session
        utterance = "Replace Step 2 with: email me at a.b@example.org"
        outcome = handle_utterance(session, utterance, backend)
        assert any("possible email address" in m for m in outcome.messages)
        assert any("override" in m for m in outcome.messages)
        assert outcome.messages[-1] == REVIEW_QUESTION
        assert session.chain.step_by_ordinal(2).text == "Second point."  # held
        outcome = handle_utterance(session, "override", backend)
        assert session.chain.step_by_ordinal(2).text == "email me at a.b@example.org"
        assert session.chain.step_by_ordinal(3).text == "Third, recomputed."

    def test_non_override_reply_processes_normally(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        handle_utterance(
            session, "Replace Step 2 with: reach me at a.b@example.org", four_step_backend
        )
        outcome = handle_utterance(session, "delete step 4", four_step_backend)
        assert session.pending_override is None
        assert session.chain.ordinals() == [1, 2, 3]
        assert session.chain.step_by_ordinal(2).text == "Second point."

    def test_model_output_pii_warns_without_blocking(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [
                    "[Step 1] Contact a.b@example.org for data.\n\n[Step 2] Proceed."
                ]
            }
        )
        outcome = start(backend)
        assert outcome.session.state is SessionState.AWAITING_REVIEW
        assert any("possible email address" in m for m in outcome.messages)
        assert outcome.messages.index(REVIEW_QUESTION) == len(outcome.messages) - 1


class TestBiasCheckAndExport:
    def test_bias_check_remains_in_review(self):
        backend = scripted(
            {
                ("InitialDraft", (), 0): [FOUR_STEP_DRAFT],
                ("BiasAudit", (2,), 0): ["The step presumes a single user population."],
            }
        )
        outcome = start(backend)
        session = outcome.session
        outcome = handle_utterance(session, "Is there any bias in Step 2?", backend)
        assert session.state is SessionState.AWAITING_REVIEW
        assert "The step presumes a single user population." in outcome.messages
        assert outcome.messages[-1] == REVIEW_QUESTION

    def test_bias_check_unknown_step(self, four_step_backend):
        outcome = start(four_step_backend)
        outcome = handle_utterance(
            outcome.session, "Is there any bias in Step 42?", four_step_backend
        )
        assert "Step 42 does not exist" in outcome.messages[0]

    def test_export_utterance_emits_document(self, four_step_backend):
        outcome = start(four_step_backend)
        outcome = handle_utterance(outcome.session, "export as markdown", four_step_backend)
        assert outcome.messages[0].startswith("# Reasoning session")
        assert outcome.messages[-1] == REVIEW_QUESTION

    def test_export_idempotent(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        first = export_session(session, ExportFormat.MARKDOWN)
        second = export_session(session, ExportFormat.MARKDOWN)
        assert first == second
        json_first = export_session(session, ExportFormat.JSON)
        json_second = export_session(session, ExportFormat.JSON)
        assert json_first == json_second

    def test_json_export_reports_state_and_edits(self, four_step_backend):
        import json as jsonlib

        outcome = start(four_step_backend)
        data = jsonlib.loads(export_session(outcome.session, ExportFormat.JSON))
        assert data["state"] == "AwaitingReview"
        assert data["edit_log"] == []

    def test_markdown_export_contains_history_and_answer(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        handle_utterance(
            session, "Replace Step 2 with: Assume X leads to Z instead.", four_step_backend
        )
        handle_utterance(session, "Continue", four_step_backend)
        document = export_session(session, ExportFormat.MARKDOWN)
        assert "Assume X leads to Z instead." in document
        assert "Answer from the edited chain." in document
        assert "Replaced Step 2" in document
        assert "Model disclosure:" in document


class TestEngineInvariants:
    def test_one_disclosure_event_per_model_call(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        handle_utterance(
            session, "Replace Step 2 with: Assume X leads to Z instead.", four_step_backend
        )
        handle_utterance(session, "Continue", four_step_backend)
        disclosures = [e for e in session.transcript if e.kind == "Disclosure"]
        replies = [e for e in session.transcript if e.kind == "ModelReply"]
        assert len(disclosures) == len(replies) == 3  # draft, regen, final
        for event in disclosures:
            assert event.payload["model_version"]
            assert event.payload["parameters"]

    def test_review_question_closes_every_review_outcome(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        for utterance in (
            "tell me a joke",
            "Replace Step 99 with: x",
            "export",
            "Replace Step 2 with: Assume X leads to Z instead.",
        ):
            outcome = handle_utterance(session, utterance, four_step_backend)
            if session.state is SessionState.AWAITING_REVIEW:
                assert outcome.messages[-1] == REVIEW_QUESTION

    def test_finished_flag_tracks_terminal_states(self, four_step_backend):
        outcome = start(four_step_backend)
        assert outcome.finished is (outcome.session.state in (SessionState.DONE, SessionState.FAILED))
        outcome = handle_utterance(outcome.session, "Continue", four_step_backend)
        assert outcome.finished and outcome.session.state is SessionState.DONE

    def test_transcript_is_append_only(self, four_step_backend):
        outcome = start(four_step_backend)
        session = outcome.session
        lengths = [len(session.transcript)]
        seen = list(session.transcript)
        for utterance in (
            "tell me something",
            "Replace Step 2 with: Assume X leads to Z instead.",
            "export",
            "Continue",
        ):
            handle_utterance(session, utterance, four_step_backend)
            assert len(session.transcript) >= lengths[-1]
            assert session.transcript[: len(seen)] == seen  # prefix never rewritten
            lengths.append(len(session.transcript))
            seen = list(session.transcript)
        assert lengths == sorted(lengths)

    def test_minimal_recomputation_single_edit(self):
        backend = EchoBackend(draft_steps=6)
        outcome = start(backend)
        session = outcome.session
        before = {step.id: step.text for step in session.chain.steps}
        edited_id = session.chain.step_by_ordinal(3).id
        from stepchain import Replace, apply_edit

        _, expected_invalidated = apply_edit(session.chain, Replace(3, "changed text"))
        handle_utterance(session, "Replace Step 3 with: changed text", backend)
        after = {step.id: step.text for step in session.chain.steps}
        changed = {sid for sid in before if before[sid] != after.get(sid)}
        assert changed <= ({edited_id} | set(expected_invalidated))
