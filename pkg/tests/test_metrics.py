from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfspan.metrics import (
    MetricsError,
    binary_counts,
    binary_prf,
    macro_span_report,
    prf_from_counts,
    round_half_away,
    span_score,
)
from cfspan.span_codec import SpanPrediction


def _labels(tp, fp, fn, tn=0):
    gold = [1] * tp + [0] * fp + [1] * fn + [0] * tn
    pred = [1] * tp + [1] * fp + [0] * fn + [0] * tn
    return gold, pred


class TestRounding:
    def test_half_away_from_zero(self):
        assert round_half_away(0.8595, 3) == 0.860
        assert round_half_away(0.0005, 3) == 0.001
        assert round_half_away(-0.0005, 3) == -0.001
        assert round_half_away(0.85449, 3) == 0.854

    def test_six_decimal_exact_match(self):
        assert round_half_away(1 / 1950, 6) == 0.000513


class TestBinaryPrf:
    def test_counts(self):
        gold, pred = _labels(3, 2, 1, 4)
        counts = binary_counts(gold, pred)
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == (3, 2, 1, 4)

    def test_harmonic_mean_identity(self):
        report = binary_prf(*_labels(6, 2, 3))
        expected = 2 * report.precision * report.recall / (report.precision + report.recall)
        assert report.f1 == pytest.approx(expected)
        assert report.support == 9

    def test_zero_denominators_score_zero(self):
        report = binary_prf([1, 1], [0, 0])  # nothing predicted positive
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)
        report = binary_prf([0, 0], [1, 1])  # nothing actually positive
        assert (report.recall, report.f1) == (0.0, 0.0)

    def test_all_correct(self):
        report = binary_prf([1, 0, 1], [1, 0, 1])
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_length_mismatch(self):
        with pytest.raises(MetricsError):
            binary_prf([1], [1, 0])

    def test_non_binary_label(self):
        with pytest.raises(MetricsError):
            binary_prf([2], [1])


# Historical scoreboard rows this implementation is expected to reproduce.
# Each row is checked through a small integer confusion realization whose
# exact scores fall within one rounding step of the published triple.
REFERENCE_ROWS = [
    # (name, tp, fp, fn, precision, recall, f1)
    ("run_a_best", 61, 8, 12, 0.884, 0.836, 0.859),
    ("run_a_cleaned", 87, 23, 10, 0.791, 0.897, 0.841),
    ("run_a_augmented", 175, 27, 33, 0.866, 0.841, 0.854),
    ("run_b_best", 133, 22, 18, 0.858, 0.881, 0.869),
    ("run_b_cleaned", 104, 15, 19, 0.874, 0.846, 0.860),
    ("vote_of_both", 89, 16, 11, 0.848, 0.890, 0.868),
]


@pytest.mark.parametrize("name,tp,fp,fn,precision,recall,f1", REFERENCE_ROWS)
def test_reference_detection_rows(name, tp, fp, fn, precision, recall, f1):
    report = binary_prf(*_labels(tp, fp, fn, tn=50))
    assert abs(report.precision - precision) <= 0.001, name
    assert abs(report.recall - recall) <= 0.001, name
    assert abs(report.f1 - f1) <= 0.001, name


class TestSpanScore:
    def test_truncated_prediction(self):
        text = "x" * 61
        gold = SpanPrediction(0, 50, -1, -1)
        pred = SpanPrediction(0, 40, -1, -1)
        score = span_score(text, gold, pred)
        assert score.precision == 1.0
        assert score.recall == pytest.approx(41 / 51)
        assert round_half_away(score.f1, 3) == 0.891
        assert not score.exact

    def test_exact_match(self):
        text = "y" * 20
        quad = SpanPrediction(0, 8, 10, 19)
        score = span_score(text, quad, quad)
        assert score == span_score(text, quad, quad)
        assert (score.precision, score.recall, score.f1, score.exact) == (1, 1, 1, True)

    def test_role_confusion_scores_zero_overlap(self):
        # Same characters, wrong role: antecedent positions never match
        # consequent positions.
        text = "z" * 10
        gold = SpanPrediction(0, 4, -1, -1)
        pred = SpanPrediction(-1, -1, 0, 4)
        score = span_score(text, gold, pred)
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_empty_vs_empty_is_perfect(self):
        score = span_score("abc", SpanPrediction(), SpanPrediction())
        assert (score.precision, score.recall, score.f1, score.exact) == (1, 1, 1, True)

    def test_one_sided_empty_scores_zero(self):
        gold = SpanPrediction(0, 2, -1, -1)
        score = span_score("abcd", gold, SpanPrediction())
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)
        score = span_score("abcd", SpanPrediction(), gold)
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_invalid_span_rejected(self):
        with pytest.raises(MetricsError):
            span_score("abc", SpanPrediction(0, 9, -1, -1), SpanPrediction())


class TestMacro:
    def test_unweighted_mean(self):
        text_a, text_b = "a" * 10, "b" * 100
        gold_a = SpanPrediction(0, 9, -1, -1)
        gold_b = SpanPrediction(0, 99, -1, -1)
        half_b = SpanPrediction(0, 49, -1, -1)
        scores = [
            span_score(text_a, gold_a, gold_a),
            span_score(text_b, gold_b, half_b),
        ]
        report = macro_span_report(scores)
        assert report.recall == pytest.approx((1.0 + 0.5) / 2)
        assert report.count == 2

    def test_one_exact_in_1950(self):
        text = "t" * 8
        quad = SpanPrediction(0, 7, -1, -1)
        off = SpanPrediction(0, 6, -1, -1)
        scores = [span_score(text, quad, quad)]
        scores += [span_score(text, quad, off)] * 1949
        report = macro_span_report(scores)
        assert report.count == 1950
        assert round_half_away(report.exact_match_rate, 6) == 0.000513

    def test_empty_list_rejected(self):
        with pytest.raises(MetricsError):
            macro_span_report([])


_quad = st.integers(min_value=0, max_value=19).flatmap(
    lambda s: st.integers(min_value=s, max_value=19).map(lambda e: (s, e))
)


@st.composite
def _pred(draw):
    has_ante = draw(st.booleans())
    has_cons = draw(st.booleans())
    ante = draw(_quad) if has_ante else (-1, -1)
    cons = draw(_quad) if has_cons else (-1, -1)
    return SpanPrediction(ante[0], ante[1], cons[0], cons[1])


@given(_pred(), _pred())
@settings(max_examples=300)
def test_span_score_symmetry_and_bounds(a, b):
    """Swapping gold/prediction swaps precision and recall; F1 is symmetric."""
    text = "s" * 20
    ab = span_score(text, a, b)
    ba = span_score(text, b, a)
    assert ab.precision == pytest.approx(ba.recall)
    assert ab.recall == pytest.approx(ba.precision)
    assert ab.f1 == pytest.approx(ba.f1)
    for value in (ab.precision, ab.recall, ab.f1):
        assert 0.0 <= value <= 1.0
    if ab.f1 > 0:
        assert math.isclose(
            ab.f1, 2 * ab.precision * ab.recall / (ab.precision + ab.recall)
        )
