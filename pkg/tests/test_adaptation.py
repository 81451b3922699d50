"""Style features, preference updates, reranking, directive synthesis."""

from __future__ import annotations

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepchain import (
    EditRecord,
    PreferenceVector,
    extract_features,
    record_edit,
    rerank,
    synthesize_directives,
)
from stepchain.adaptation import (
    ASSUMPTION_MARKERS,
    COUNTEREXAMPLE_MARKERS,
    EVIDENCE_MARKERS,
    HEDGING_MARKERS,
    load_edit_log,
    save_edit_log,
    tokenize,
)
from stepchain.errors import IdenticalTextsError


def reference_features(text: str) -> tuple[float, ...]:
    """Ten-line reference oracle, fixed before the build; reimplements the
    feature definition independently of the production code."""
    toks = [w.rstrip(string.punctuation) for w in text.lower().split()]
    toks = [w for w in toks if w]
    if not toks:
        return (0.0,) * 6

    def dens(lex):
        c = 0
        for entry in lex:
            p = [w.rstrip(string.punctuation) for w in entry.lower().split()]
            i = 0
            while i <= len(toks) - len(p):
                if toks[i : i + len(p)] == p:
                    c += 1
                    i += len(p)
                else:
                    i += 1
        return min(1.0, c / len(toks))

    return (
        min(1.0, len(toks) / 100.0),
        dens(COUNTEREXAMPLE_MARKERS),
        dens(ASSUMPTION_MARKERS),
        dens(HEDGING_MARKERS),
        min(1.0, text.count("?") / len(toks)),
        dens(EVIDENCE_MARKERS),
    )


class TestExtractFeatures:
    def test_empty_text_is_zero_vector(self):
        assert extract_features("") == (0.0,) * 6

    def test_assumption_density_hand_count(self):
        # "Assume X. Suppose Y." -> 4 tokens, 2 assumption markers -> 0.5
        features = extract_features("Assume X. Suppose Y.")
        assert features[2] == pytest.approx(0.5)
        assert features == reference_features("Assume X. Suppose Y.")

    def test_one_however_per_50_tokens(self):
        filler = " ".join(["word"] * 49)
        text = "however " + filler
        features = extract_features(text)
        assert features[1] == pytest.approx(1 / 50)  # 0.02 scale
        assert features == reference_features(text)

    def test_multiword_markers_count(self):
        text = "for example this holds given that we measured it"
        features = extract_features(text)
        assert features == reference_features(text)
        assert features[5] > 0  # "for example"
        assert features[2] > 0  # "given that"

    def test_abbreviation_marker_survives_tokenization(self):
        text = "dialect metrics, e.g., perplexity"
        assert extract_features(text)[5] > 0

    def test_question_density(self):
        features = extract_features("Why? How? Because reasons.")
        assert features[4] == pytest.approx(min(1.0, 2 / 4))

    def test_matches_reference_oracle_on_corpus(self):
        samples = [
            "However, the data may suggest otherwise. Assume nothing.",
            "Studies show, for example, that such as clauses stack.",
            "could might possibly perhaps may",
            "counterexample unless but instead however",
            "A long sentence " + "pad " * 120,
        ]
        for text in samples:
            assert extract_features(text) == reference_features(text)

    def test_all_components_bounded(self):
        text = "however " * 500 + "?" * 50
        assert all(0.0 <= f <= 1.0 for f in extract_features(text))

    def test_tokenize_strips_trailing_punctuation_only(self):
        assert tokenize("e.g., Wow! mid-word stays.") == ["e.g", "wow", "mid-word", "stays"]


class TestRecordEdit:
    def test_identical_texts_rejected(self):
        with pytest.raises(IdenticalTextsError):
            EditRecord("s", 1, "same", "same", 0)

    def test_single_update_arithmetic(self):
        # p=0, alpha=0.3, delta=(0, 0.5, 0, 0, 0, 0) -> p=(0, 0.15, 0, 0, 0, 0)
        pref = PreferenceVector(alpha=0.3)
        original = "plain claim here now"  # 4 tokens, no markers
        revision = "but instead claim now"  # 4 tokens, 2 counterexample markers
        delta = tuple(
            r - o for r, o in zip(extract_features(revision), extract_features(original))
        )
        assert delta[1] == pytest.approx(0.5)
        log: list[EditRecord] = []
        updated = record_edit(log, pref, EditRecord("s", 1, original, revision, 0))
        assert updated.p[1] == pytest.approx(0.3 * 0.5)
        assert updated.update_count == 1
        assert len(log) == 1

    def test_convergence_to_delta(self):
        # 50 identical updates: |p - d| < 1e-6 since (1-0.3)^50 ~ 1.8e-8
        pref = PreferenceVector(alpha=0.3)
        original = "plain claim here now"
        revision = "but instead claim now"
        delta = tuple(
            r - o for r, o in zip(extract_features(revision), extract_features(original))
        )
        log: list[EditRecord] = []
        for i in range(50):
            pref = record_edit(log, pref, EditRecord("s", 1, original, revision, i))
        assert pref.update_count == 50
        for weight, change in zip(pref.p, delta):
            assert abs(weight - change) < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.sampled_from(
                    ["but instead", "assume suppose", "may might", "evidence studies", "plain"]
                ),
                st.sampled_from(["however unless", "presumably", "possibly perhaps", "plain"]),
            ),
            min_size=1,
            max_size=20,
        )
    )
    def test_boundedness_under_any_update_sequence(self, pairs):
        pref = PreferenceVector(alpha=0.3)
        log: list[EditRecord] = []
        for i, (original, revision) in enumerate(pairs):
            if original == revision:
                continue
            pref = record_edit(log, pref, EditRecord("s", 1, original, revision, i))
            assert all(-1.0 <= w <= 1.0 for w in pref.p)


class TestRerank:
    def test_zero_preference_is_identity(self):
        pref = PreferenceVector()
        candidates = ["gamma text", "alpha text", "beta text"]
        assert rerank(candidates, pref) == candidates

    def test_counterexample_preference_promotes_marker_rich_candidate(self):
        pref = PreferenceVector(p=(0, 1, 0, 0, 0, 0))
        plain = "the claim holds in all cases we examined"
        rich = "however the claim fails; but a fix exists"
        assert rerank([plain, rich], pref)[0] == rich

    def test_single_candidate(self):
        assert rerank(["only"], PreferenceVector(p=(1, 1, 1, 1, 1, 1))) == ["only"]

    def test_permutation_property(self):
        pref = PreferenceVector(p=(0.5, -0.5, 0.2, 0, 0.9, -0.1))
        candidates = ["a b c", "however but", "assume this", "why? what?", "e.g. evidence"]
        ranked = rerank(candidates, pref)
        assert sorted(ranked) == sorted(candidates)

    def test_stability_on_constructed_ties(self):
        pref = PreferenceVector(p=(0, 1, 0, 0, 0, 0))
        # identical feature vectors -> identical scores -> input order kept
        a = "however one two three"
        b = "however uno dos tres"
        assert rerank([a, b], pref) == [a, b]
        assert rerank([b, a], pref) == [b, a]

    def test_identical_features_identity_regardless_of_preference(self):
        pref = PreferenceVector(p=(0.9, -0.8, 0.7, -0.6, 0.5, -0.4))
        candidates = ["same words here", "same words here!", "same words here."]
        assert rerank(candidates, pref) == candidates


class TestSynthesizeDirectives:
    def test_zero_vector_yields_nothing(self):
        assert synthesize_directives(PreferenceVector(), 0.25) == []

    def test_counterexample_directive(self):
        pref = PreferenceVector(p=(0, 0.4, 0, 0, 0, 0))
        assert synthesize_directives(pref, 0.25) == [
            "Prefer concrete counterexamples over unexamined assumptions."
        ]

    def test_negative_assumption_directive(self):
        pref = PreferenceVector(p=(0, 0, -0.4, 0, 0, 0))
        assert synthesize_directives(pref, 0.25) == ["Avoid introducing unexamined assumptions."]

    def test_two_directives_ordered_by_feature_index(self):
        pref = PreferenceVector(p=(0, 0.4, 0, -0.4, 0, 0))
        lines = synthesize_directives(pref, 0.25)
        assert lines == [
            "Prefer concrete counterexamples over unexamined assumptions.",
            "Avoid hedging; state the strongest supported conclusion.",
        ]

    def test_threshold_is_strict(self):
        pref = PreferenceVector(p=(0, 0.25, 0, 0, 0, 0))
        assert synthesize_directives(pref, 0.25) == []


class TestEditLogPersistence:
    def test_round_trip(self, tmp_path):
        records = [
            EditRecord("s1", 0, "old a", "new a", 3),
            EditRecord("s1", 2, "old b", "new b", 9),
        ]
        path = tmp_path / "edits.jsonl"
        save_edit_log(records, path)
        assert load_edit_log(path) == records
