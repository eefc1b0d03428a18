from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfspan.baselines import LabelPrediction
from cfspan.ensemble import (
    EnsembleConfig,
    EnsembleError,
    TIE_FIRST_MODEL,
    TIE_MEAN_SCORE,
    TIE_POSITIVE,
    majority_vote,
)


def _preds(labels, scores=None, ids=None):
    out = []
    for i, label in enumerate(labels):
        out.append(
            LabelPrediction(
                label,
                scores[i] if scores else None,
                ids[i] if ids else None,
            )
        )
    return out


class TestMajority:
    def test_strict_majority(self):
        sets = [_preds([1, 0]), _preds([1, 0]), _preds([0, 0])]
        combined = majority_vote(sets)
        assert [p.label for p in combined] == [1, 0]

    def test_three_model_enumeration(self):
        """All 2^3 vote patterns match the counted majority."""
        for votes in itertools.product([0, 1], repeat=3):
            sets = [_preds([v]) for v in votes]
            [combined] = majority_vote(sets)
            assert combined.label == int(sum(votes) >= 2), votes

    def test_tie_first_model(self):
        sets = [_preds([0]), _preds([1])]
        [combined] = majority_vote(sets, EnsembleConfig(TIE_FIRST_MODEL))
        assert combined.label == 0
        sets = [_preds([1]), _preds([0])]
        [combined] = majority_vote(sets, EnsembleConfig(TIE_FIRST_MODEL))
        assert combined.label == 1

    def test_tie_positive(self):
        sets = [_preds([0]), _preds([1])]
        [combined] = majority_vote(sets, EnsembleConfig(TIE_POSITIVE))
        assert combined.label == 1

    def test_tie_mean_score(self):
        low = [_preds([0], [0.1]), _preds([1], [0.6])]   # mean 0.35 -> 0
        high = [_preds([0], [0.45]), _preds([1], [0.9])]  # mean 0.675 -> 1
        assert majority_vote(low, EnsembleConfig(TIE_MEAN_SCORE))[0].label == 0
        assert majority_vote(high, EnsembleConfig(TIE_MEAN_SCORE))[0].label == 1

    def test_tie_mean_score_without_scores_errors(self):
        sets = [_preds([0]), _preds([1])]
        with pytest.raises(EnsembleError, match="scored"):
            majority_vote(sets, EnsembleConfig(TIE_MEAN_SCORE))

    def test_all_tie_policies_on_two_by_two(self):
        # Tied and untied positions in one batch, all three policies.
        sets = [_preds([1, 1]), _preds([0, 1])]
        assert [p.label for p in majority_vote(sets, EnsembleConfig(TIE_FIRST_MODEL))] == [1, 1]
        assert [p.label for p in majority_vote(sets, EnsembleConfig(TIE_POSITIVE))] == [1, 1]
        sets = [_preds([0, 1]), _preds([1, 1])]
        assert [p.label for p in majority_vote(sets, EnsembleConfig(TIE_FIRST_MODEL))] == [0, 1]

    def test_output_score_is_mean_of_available(self):
        sets = [_preds([1], [0.8]), _preds([1], [0.6]), _preds([1])]
        [combined] = majority_vote(sets)
        assert combined.score == pytest.approx(0.7)

    def test_score_none_when_no_member_scored(self):
        [combined] = majority_vote([_preds([1]), _preds([1]), _preds([0])])
        assert combined.score is None

    def test_sentence_ids_carried_and_checked(self):
        sets = [_preds([1], ids=["s1"]), _preds([1], ids=["s1"])]
        assert majority_vote(sets)[0].sentence_id == "s1"
        bad = [_preds([1], ids=["s1"]), _preds([1], ids=["s2"])]
        with pytest.raises(EnsembleError, match="disagree"):
            majority_vote(bad)

    def test_length_mismatch(self):
        with pytest.raises(EnsembleError, match="rows"):
            majority_vote([_preds([1, 0]), _preds([1])])

    def test_no_sets(self):
        with pytest.raises(EnsembleError):
            majority_vote([])

    def test_bad_tie_policy(self):
        with pytest.raises(ValueError):
            EnsembleConfig("coin_flip")


@given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), min_size=1, max_size=7))
@settings(max_examples=200)
def test_odd_ensembles_ignore_model_order(label_sets):
    """With an odd member count there are no ties, so order cannot matter."""
    if len(label_sets) % 2 == 0:
        label_sets = label_sets[:-1] or [[1, 0, 1, 0]]
    sets = [_preds(labels) for labels in label_sets]
    forward = [p.label for p in majority_vote(sets)]
    backward = [p.label for p in majority_vote(list(reversed(sets)))]
    assert forward == backward


@given(st.lists(st.integers(0, 1), min_size=1, max_size=10), st.integers(1, 5))
def test_unanimous_copies_identical_members(labels, copies):
    sets = [_preds(labels) for _ in range(copies)]
    assert [p.label for p in majority_vote(sets)] == labels
