"""Evaluation: binary precision/recall/F1 and character-span overlap scores.

Span scoring treats each labeled character position as one retrieval unit: a
position counts toward precision/recall when gold and prediction assign it
the same role (antecedent or consequent).  Sentence scores are averaged
macro-style — score each sentence, then take the unweighted mean — so short
sentences count as much as long ones.  Zero denominators score 0, except
that two empty spans agree perfectly and score 1.

Published-style rounding is half away from zero: three decimals for
precision/recall/F1, six for exact-match rates (which can be legitimately
tiny, e.g. one hit in 1950 sentences = 0.000513).
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass

from .span_codec import SpanPrediction, span_pair_issues


class MetricsError(ValueError):
    """Inputs to a metric are malformed (length mismatch, bad span, ...)."""


def round_half_away(value: float, digits: int) -> float:
    """Round with ties going away from zero (0.0005 -> 0.001 at 3 digits)."""
    quantum = decimal.Decimal(1).scaleb(-digits)
    return float(
        decimal.Decimal(repr(value)).quantize(quantum, rounding=decimal.ROUND_HALF_UP)
    )


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    support: int


def binary_counts(gold: list[int], predicted: list[int]) -> BinaryCounts:
    if len(gold) != len(predicted):
        raise MetricsError(f"{len(gold)} gold labels but {len(predicted)} predictions")
    tp = fp = fn = tn = 0
    for g, p in zip(gold, predicted):
        if g not in (0, 1) or p not in (0, 1):
            raise MetricsError(f"labels must be 0 or 1, got gold={g}, predicted={p}")
        if g == 1 and p == 1:
            tp += 1
        elif g == 0 and p == 1:
            fp += 1
        elif g == 1 and p == 0:
            fn += 1
        else:
            tn += 1
    return BinaryCounts(tp, fp, fn, tn)


def prf_from_counts(counts: BinaryCounts) -> MetricReport:
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricReport(precision, recall, f1, support=tp + fn)


def binary_prf(gold: list[int], predicted: list[int]) -> MetricReport:
    """Positive-class precision/recall/F1 over paired label lists."""
    return prf_from_counts(binary_counts(gold, predicted))


@dataclass(frozen=True)
class SpanScore:
    precision: float
    recall: float
    f1: float
    exact: bool


def _labeled_positions(pred: SpanPrediction) -> set[tuple[int, str]]:
    out: set[tuple[int, str]] = set()
    if pred.antecedent_start != -1:
        out.update(
            (i, "ante") for i in range(pred.antecedent_start, pred.antecedent_end + 1)
        )
    if pred.consequent_start != -1:
        out.update(
            (i, "cons") for i in range(pred.consequent_start, pred.consequent_end + 1)
        )
    return out


def _checked(text: str, quad: SpanPrediction, name: str) -> SpanPrediction:
    issues = []
    issues += span_pair_issues(
        quad.antecedent_start, quad.antecedent_end, len(text), f"{name} antecedent"
    )
    issues += span_pair_issues(
        quad.consequent_start, quad.consequent_end, len(text), f"{name} consequent"
    )
    if issues:
        raise MetricsError("; ".join(msg for _, msg in issues))
    return quad


def span_score(text: str, gold: SpanPrediction, predicted: SpanPrediction) -> SpanScore:
    """Character-overlap precision/recall/F1 for one sentence.

    Both quadruples are validated against the sentence length.  When gold and
    prediction both label nothing there is nothing to miss, so the sentence
    scores a perfect (1, 1, 1); one-sided emptiness scores 0.
    """
    gold_positions = _labeled_positions(_checked(text, gold, "gold"))
    pred_positions = _labeled_positions(_checked(text, predicted, "predicted"))
    exact = gold.as_tuple() == predicted.as_tuple()
    if not gold_positions and not pred_positions:
        return SpanScore(1.0, 1.0, 1.0, exact)
    overlap = len(gold_positions & pred_positions)
    precision = overlap / len(pred_positions) if pred_positions else 0.0
    recall = overlap / len(gold_positions) if gold_positions else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SpanScore(precision, recall, f1, exact)


@dataclass(frozen=True)
class MacroSpanReport:
    precision: float
    recall: float
    f1: float
    exact_match_rate: float
    count: int


def macro_span_report(scores: list[SpanScore]) -> MacroSpanReport:
    """Unweighted mean of per-sentence span scores plus the exact-match rate."""
    if not scores:
        raise MetricsError("cannot aggregate an empty score list")
    n = len(scores)
    return MacroSpanReport(
        precision=sum(s.precision for s in scores) / n,
        recall=sum(s.recall for s in scores) / n,
        f1=sum(s.f1 for s in scores) / n,
        exact_match_rate=sum(1 for s in scores if s.exact) / n,
        count=n,
    )


__all__ = [
    "BinaryCounts",
    "MacroSpanReport",
    "MetricReport",
    "MetricsError",
    "SpanScore",
    "binary_counts",
    "binary_prf",
    "macro_span_report",
    "prf_from_counts",
    "round_half_away",
    "span_score",
]
