"""Majority voting over aligned detection prediction sets.

All sets must agree on sentence order (checked through the sentence IDs when
present) and length.  Strict majorities decide directly; even splits fall to
the configured tie policy: take the first model's vote, threshold the mean
score at 0.5, or just answer positive.
"""

from __future__ import annotations

from dataclasses import dataclass

from .baselines import LabelPrediction

TIE_FIRST_MODEL = "first_model"
TIE_MEAN_SCORE = "mean_score"
TIE_POSITIVE = "positive"

TIE_POLICIES = (TIE_FIRST_MODEL, TIE_MEAN_SCORE, TIE_POSITIVE)


class EnsembleError(ValueError):
    """Prediction sets cannot be combined."""


@dataclass(frozen=True)
class EnsembleConfig:
    tie_policy: str = TIE_FIRST_MODEL
    model_order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.tie_policy not in TIE_POLICIES:
            raise ValueError(
                f"tie_policy must be one of {', '.join(TIE_POLICIES)}, "
                f"got {self.tie_policy!r}"
            )


def majority_vote(
    prediction_sets: list[list[LabelPrediction]],
    config: EnsembleConfig | None = None,
) -> list[LabelPrediction]:
    """Combine aligned prediction sets into one by per-sentence majority.

    The output score is the mean of the available member scores (``None``
    when no member carries one).  The ``mean_score`` tie policy needs at
    least one scored member at the tied position and errors otherwise.
    """
    if config is None:
        config = EnsembleConfig()
    if not prediction_sets:
        raise EnsembleError("no prediction sets to combine")
    n = len(prediction_sets[0])
    for k, preds in enumerate(prediction_sets):
        if len(preds) != n:
            raise EnsembleError(
                f"prediction set {k} has {len(preds)} rows, expected {n}"
            )

    combined: list[LabelPrediction] = []
    for i in range(n):
        rows = [preds[i] for preds in prediction_sets]
        ids = {r.sentence_id for r in rows if r.sentence_id is not None}
        if len(ids) > 1:
            raise EnsembleError(
                f"row {i}: sentence IDs disagree across sets: {sorted(ids)}"
            )
        sentence_id = next(iter(ids)) if ids else None
        scores = [r.score for r in rows if r.score is not None]
        mean_score = sum(scores) / len(scores) if scores else None

        votes = sum(r.label for r in rows)
        if 2 * votes > len(rows):
            label = 1
        elif 2 * votes < len(rows):
            label = 0
        elif config.tie_policy == TIE_FIRST_MODEL:
            label = rows[0].label
        elif config.tie_policy == TIE_POSITIVE:
            label = 1
        else:  # TIE_MEAN_SCORE
            if mean_score is None:
                raise EnsembleError(
                    f"row {i}: mean_score tie policy needs at least one scored member"
                )
            label = int(mean_score >= 0.5)
        combined.append(LabelPrediction(label, mean_score, sentence_id))
    return combined


__all__ = [
    "EnsembleConfig",
    "EnsembleError",
    "TIE_FIRST_MODEL",
    "TIE_MEAN_SCORE",
    "TIE_POLICIES",
    "TIE_POSITIVE",
    "majority_vote",
]
