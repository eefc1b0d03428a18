"""Trainable reference models: a detector and a span tagger.

These are deliberately small, fully deterministic stand-ins for the heavy
fine-tuned encoders the pipeline was designed around.  The detector is a
logistic regression over hashed unigram/bigram counts (FNV-1a 64-bit, modulo
a fixed table size); the tagger is a greedy left-to-right averaged
perceptron.  Both draw every random decision from ``random.Random(seed)``
(seeded Mersenne Twister), so identical config + seed reproduces identical
weights, byte for byte, and both serialize to self-describing JSON alongside
the exact training configuration that produced them.

``import_external_predictions`` is the adapter seam: predictions produced by
any external system can enter the evaluation/ensemble path as long as they
arrive in the documented CSV or stacked-tag shapes.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import DEFAULT_SEED
from .span_codec import Tag, TagSequence
from .tokenizer import Token, tokenize

DEFAULT_HASH_DIMENSION = 2**18

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

MODEL_FORMAT = "cfspan-model"
MODEL_VERSION = 1

TAG_ORDER = (Tag.NONE, Tag.ANTE, Tag.CONS)

_START = "<start>"
_PAD_LEFT = "<s>"
_PAD_RIGHT = "</s>"


class TrainingError(ValueError):
    """Training data cannot support a model (single class, empty corpus, ...)."""


class ModelFormatError(ValueError):
    """A serialized model or external prediction file is malformed."""


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters shared by both trainable models.

    ``dropout`` and ``epsilon`` are carried and serialized as provenance but
    not consumed by these closed-form baselines; the ``*_finetune_preset``
    constructors preserve the full fine-tuning recipe the pipeline was
    originally tuned with, while the constructor defaults are sized for the
    models actually trained here.
    """

    batch_size: int = 32
    learning_rate: float = 0.1
    epochs: int = 5
    dropout: float = 0.1
    epsilon: float = 1e-8
    max_sequence_length: int = 128
    holdout_fraction: float = 0.05
    positive_class_weight: float = 1.0
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 <= self.dropout < 1:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_sequence_length < 1:
            raise ValueError(
                f"max_sequence_length must be >= 1, got {self.max_sequence_length}"
            )
        if not 0 < self.holdout_fraction < 1:
            raise ValueError(
                f"holdout_fraction must be in (0, 1), got {self.holdout_fraction}"
            )
        if self.positive_class_weight <= 0:
            raise ValueError(
                f"positive_class_weight must be > 0, got {self.positive_class_weight}"
            )

    @classmethod
    def sentence_finetune_preset(cls) -> "TrainingConfig":
        """The original encoder fine-tuning recipe for the detection track."""
        return cls(learning_rate=5e-5, epochs=3, holdout_fraction=0.05)

    @classmethod
    def span_finetune_preset(cls) -> "TrainingConfig":
        """The original encoder fine-tuning recipe for the extraction track."""
        return cls(learning_rate=3e-5, epochs=4, holdout_fraction=0.10)

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "dropout": self.dropout,
            "epsilon": self.epsilon,
            "max_sequence_length": self.max_sequence_length,
            "holdout_fraction": self.holdout_fraction,
            "positive_class_weight": self.positive_class_weight,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainingConfig":
        return cls(**payload)


def fnv1a_64(text: str) -> int:
    """FNV-1a over the UTF-8 bytes of ``text``, 64-bit."""
    value = FNV64_OFFSET_BASIS
    for byte in text.encode("utf-8"):
        value ^= byte
        value = (value * FNV64_PRIME) & _MASK64
    return value


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def hashed_features(
    text: str, hash_dimension: int, max_sequence_length: int
) -> dict[int, float]:
    """Hashed unigram+bigram counts of lowercased tokens.

    Collisions simply add.  At most ``max_sequence_length`` tokens are
    consumed (enforcing the shared truncation rule before featurization).
    """
    tokens = tokenize(text)[:max_sequence_length]
    assert len(tokens) <= max_sequence_length
    words = [t.text.lower() for t in tokens]
    vec: dict[int, float] = {}

    def bump(feature: str) -> None:
        index = fnv1a_64(feature) % hash_dimension
        vec[index] = vec.get(index, 0.0) + 1.0

    for w in words:
        bump("u=" + w)
    for a, b in zip(words, words[1:]):
        bump("b=" + a + " " + b)
    return vec


FEATURE_SPEC = {"unigrams": True, "bigrams": True, "lowercase": True, "hash": "fnv1a-64"}


@dataclass
class DetectorModel:
    weights: np.ndarray
    bias: float
    hash_dimension: int
    config: TrainingConfig
    feature_spec: dict = field(default_factory=lambda: dict(FEATURE_SPEC))

    def score(self, text: str) -> float:
        vec = hashed_features(text, self.hash_dimension, self.config.max_sequence_length)
        z = self.bias + sum(self.weights[i] * c for i, c in vec.items())
        return _sigmoid(float(z))


@dataclass(frozen=True)
class LabelPrediction:
    """One detection decision; ``score`` is the positive-class probability."""

    label: int
    score: float | None = None
    sentence_id: str | None = None


def train_detector(
    records,
    config: TrainingConfig | None = None,
    hash_dimension: int = DEFAULT_HASH_DIMENSION,
) -> DetectorModel:
    """Fit the hashed logistic regression by mini-batch gradient descent.

    ``records`` need ``text`` and ``label`` attributes.  Both classes must be
    present.  Example order is reshuffled every epoch with the config seed;
    class imbalance can be countered through ``positive_class_weight``.
    """
    if config is None:
        config = TrainingConfig()
    data = [(rec.text, rec.label) for rec in records]
    labels = {label for _, label in data}
    if not data:
        raise TrainingError("no training records")
    if labels != {0, 1}:
        raise TrainingError(f"need both classes in the training data, got {sorted(labels)}")

    features = [
        hashed_features(text, hash_dimension, config.max_sequence_length)
        for text, _ in data
    ]
    weights = np.zeros(hash_dimension, dtype=np.float64)
    bias = 0.0
    rng = random.Random(config.seed)
    order = list(range(len(data)))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            grad: dict[int, float] = {}
            grad_bias = 0.0
            for idx in batch:
                vec = features[idx]
                y = data[idx][1]
                z = bias + sum(weights[i] * c for i, c in vec.items())
                error = _sigmoid(float(z)) - y
                if y == 1:
                    error *= config.positive_class_weight
                for i, c in vec.items():
                    grad[i] = grad.get(i, 0.0) + error * c
                grad_bias += error
            scale = config.learning_rate / len(batch)
            for i, g in grad.items():
                weights[i] -= scale * g
            bias -= scale * grad_bias
    return DetectorModel(weights, bias, hash_dimension, config)


def predict_detector(model: DetectorModel, texts: list[str]) -> list[LabelPrediction]:
    """Score sentences; the label is always ``score >= 0.5``.

    An empty string has no features and scores exactly ``sigmoid(bias)``.
    """
    out = []
    for text in texts:
        score = model.score(text)
        out.append(LabelPrediction(label=int(score >= 0.5), score=score))
    return out


def _tagger_features(lowers: list[str], caps: list[bool], i: int, prev: str) -> list[str]:
    n = len(lowers)
    w = lowers[i]
    return [
        "bias",
        "w=" + w,
        "pre3=" + w[:3],
        "suf3=" + w[-3:],
        "cap=" + ("1" if caps[i] else "0"),
        "w-1=" + (lowers[i - 1] if i >= 1 else _PAD_LEFT),
        "w-2=" + (lowers[i - 2] if i >= 2 else _PAD_LEFT),
        "w+1=" + (lowers[i + 1] if i + 1 < n else _PAD_RIGHT),
        "w+2=" + (lowers[i + 2] if i + 2 < n else _PAD_RIGHT),
        "bucket=" + str(min(3, i * 4 // n)),
        "prev=" + prev,
        "prev+w=" + prev + "|" + w,
    ]


def _class_scores(weights: dict[str, dict[str, float]], feats: list[str]) -> dict[str, float]:
    totals = {tag.value: 0.0 for tag in TAG_ORDER}
    for f in feats:
        per = weights.get(f)
        if per:
            for cls, wt in per.items():
                totals[cls] += wt
    return totals


def _argmax(totals: dict[str, float]) -> Tag:
    # max() keeps the first maximum, so ties resolve in TAG_ORDER.
    return max(TAG_ORDER, key=lambda tag: totals[tag.value])


@dataclass
class TaggerModel:
    weights: dict[str, dict[str, float]]
    config: TrainingConfig
    averaged: bool = True


def _prepare(sentence: TagSequence, max_length: int):
    tokens = sentence.tokens[:max_length]
    lowers = [t.text.lower() for t in tokens]
    caps = [bool(t.text) and t.text[0].isupper() for t in tokens]
    golds = [tag.value for tag in sentence.tags[:max_length]]
    return lowers, caps, golds


def train_tagger(
    sentences: list[TagSequence],
    config: TrainingConfig | None = None,
    averaged: bool = True,
) -> TaggerModel:
    """Fit the greedy averaged perceptron on tagged sentences.

    Decoding during training uses the model's own previous-tag prediction, so
    the features match inference conditions.  The averaged weights are the
    per-step mean of every intermediate weight vector.
    """
    if config is None:
        config = TrainingConfig()
    prepared = [_prepare(s, config.max_sequence_length) for s in sentences]
    prepared = [p for p in prepared if p[0]]
    if not prepared:
        raise TrainingError("no non-empty training sentences")

    weights: dict[str, dict[str, float]] = {}
    totals: dict[str, dict[str, float]] = {}
    stamps: dict[str, dict[str, int]] = {}
    step = 0

    def update(feature: str, cls: str, delta: float) -> None:
        per_w = weights.setdefault(feature, {})
        per_t = totals.setdefault(feature, {})
        per_s = stamps.setdefault(feature, {})
        per_t[cls] = per_t.get(cls, 0.0) + per_w.get(cls, 0.0) * (step - per_s.get(cls, 0))
        per_s[cls] = step
        per_w[cls] = per_w.get(cls, 0.0) + delta

    rng = random.Random(config.seed)
    order = list(range(len(prepared)))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for idx in order:
            lowers, caps, golds = prepared[idx]
            assert len(lowers) <= config.max_sequence_length
            prev = _START
            for i, gold in enumerate(golds):
                step += 1
                feats = _tagger_features(lowers, caps, i, prev)
                guess = _argmax(_class_scores(weights, feats))
                if guess.value != gold:
                    for f in feats:
                        update(f, gold, 1.0)
                        update(f, guess.value, -1.0)
                prev = guess.value

    if averaged and step:
        final: dict[str, dict[str, float]] = {}
        for feature, per_w in weights.items():
            for cls, w in per_w.items():
                total = totals[feature].get(cls, 0.0) + w * (step - stamps[feature].get(cls, 0))
                mean = total / step
                if mean:
                    final.setdefault(feature, {})[cls] = mean
        weights = final
    return TaggerModel(weights, config, averaged)


def predict_tagger(model: TaggerModel, tokens: list[Token]) -> list[Tag]:
    """Tag a tokenized sentence, greedy left to right.

    Exactly one tag per input token: only the first ``max_sequence_length``
    tokens are featurized, anything past that is deterministically ``0``.
    """
    window = tokens[: model.config.max_sequence_length]
    assert len(window) <= model.config.max_sequence_length
    lowers = [t.text.lower() for t in window]
    caps = [bool(t.text) and t.text[0].isupper() for t in window]
    tags: list[Tag] = []
    prev = _START
    for i in range(len(window)):
        feats = _tagger_features(lowers, caps, i, prev)
        guess = _argmax(_class_scores(model.weights, feats))
        tags.append(guess)
        prev = guess.value
    tags.extend([Tag.NONE] * (len(tokens) - len(window)))
    assert len(tags) == len(tokens)
    return tags


def save_model(model: DetectorModel | TaggerModel, path) -> None:
    """Serialize a model as self-describing JSON (kind, version, config, weights)."""
    if isinstance(model, DetectorModel):
        nonzero = np.flatnonzero(model.weights)
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": "detector",
            "config": model.config.to_dict(),
            "hash_dimension": model.hash_dimension,
            "feature_spec": model.feature_spec,
            "bias": model.bias,
            "weights": [[int(i), float(model.weights[i])] for i in nonzero],
        }
    elif isinstance(model, TaggerModel):
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": "tagger",
            "config": model.config.to_dict(),
            "averaged": model.averaged,
            "weights": model.weights,
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_model(path) -> DetectorModel | TaggerModel:
    """Load a model saved by :func:`save_model`; the payload declares its kind."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a serialized model")
    if payload.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model version {payload.get('version')!r}"
        )
    config = TrainingConfig.from_dict(payload["config"])
    kind = payload.get("kind")
    if kind == "detector":
        weights = np.zeros(payload["hash_dimension"], dtype=np.float64)
        for i, value in payload["weights"]:
            weights[i] = value
        return DetectorModel(
            weights,
            payload["bias"],
            payload["hash_dimension"],
            config,
            payload.get("feature_spec", dict(FEATURE_SPEC)),
        )
    if kind == "tagger":
        return TaggerModel(payload["weights"], config, payload.get("averaged", True))
    raise ModelFormatError(f"{path}: unknown model kind {kind!r}")


TASK1_PREDICTION_HEADER = ["sentenceID", "pred_label"]


def write_task1_predictions(path, predictions: list[LabelPrediction]) -> None:
    """Write detection decisions as CSV; the score column appears when every row has one."""
    with_score = all(p.score is not None for p in predictions)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            TASK1_PREDICTION_HEADER + (["score"] if with_score else [])
        )
        for p in predictions:
            row = [p.sentence_id if p.sentence_id is not None else "", p.label]
            if with_score:
                row.append(p.score)
            writer.writerow(row)


def load_task1_predictions(path) -> list[LabelPrediction]:
    """Read a detection prediction CSV (``sentenceID,pred_label[,score]``)."""
    out: list[LabelPrediction] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header not in (
            TASK1_PREDICTION_HEADER,
            TASK1_PREDICTION_HEADER + ["score"],
        ):
            raise ModelFormatError(
                f"{path}: expected header sentenceID,pred_label[,score]"
            )
        has_score = len(header) == 3
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ModelFormatError(
                    f"{path}: line {reader.line_num}: expected {len(header)} columns"
                )
            if row[1] not in ("0", "1"):
                raise ModelFormatError(
                    f"{path}: line {reader.line_num}: pred_label must be 0 or 1, "
                    f"got {row[1]!r}"
                )
            score = None
            if has_score:
                try:
                    score = float(row[2])
                except ValueError as exc:
                    raise ModelFormatError(
                        f"{path}: line {reader.line_num}: score is not a number"
                    ) from exc
                if not 0.0 <= score <= 1.0:
                    raise ModelFormatError(
                        f"{path}: line {reader.line_num}: score {score} outside [0, 1]"
                    )
            out.append(LabelPrediction(int(row[1]), score, sentence_id=row[0]))
    return out


MARKER_WORDS = ("[CLS]", "[SEP]")


def import_tag_predictions(path, markers: tuple[str, ...] = MARKER_WORDS) -> list[TagSequence]:
    """Read externally produced stacked word/tag predictions.

    Marker rows (``[CLS]``/``[SEP]``) are stripped before tag validation;
    any remaining tag outside {ante, cons, 0} is an error with its line
    number.  Tokens get canonical single-space offsets.
    """
    sentences: list[TagSequence] = []
    words: list[str] = []
    tags: list[Tag] = []

    def flush() -> None:
        nonlocal words, tags
        if words:
            sentences.append(TagSequence.from_words(words, tags))
        words, tags = [], []

    with open(path, encoding="utf-8") as fh:
        for line_num, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                flush()
                continue
            fields = line.split("\t")
            if fields[0] in markers:
                continue
            if len(fields) not in (2, 3):
                raise ModelFormatError(
                    f"{path}: line {line_num}: expected 2 or 3 tab-separated fields"
                )
            try:
                tag = Tag.from_string(fields[1])
            except ValueError as exc:
                raise ModelFormatError(f"{path}: line {line_num}: {exc}") from exc
            words.append(fields[0])
            tags.append(tag)
    flush()
    return sentences


def import_external_predictions(path, kind: str):
    """Adapter entry point: ``task1`` CSVs or ``task2_tags`` stacked files."""
    if kind == "task1":
        return load_task1_predictions(path)
    if kind == "task2_tags":
        return import_tag_predictions(path)
    raise ValueError(f"unknown prediction kind {kind!r}")


__all__ = [
    "DEFAULT_HASH_DIMENSION",
    "DetectorModel",
    "FNV64_OFFSET_BASIS",
    "FNV64_PRIME",
    "LabelPrediction",
    "MODEL_FORMAT",
    "MODEL_VERSION",
    "ModelFormatError",
    "TAG_ORDER",
    "TaggerModel",
    "TrainingConfig",
    "TrainingError",
    "fnv1a_64",
    "hashed_features",
    "import_external_predictions",
    "import_tag_predictions",
    "load_model",
    "load_task1_predictions",
    "predict_detector",
    "predict_tagger",
    "save_model",
    "train_detector",
    "train_tagger",
    "write_task1_predictions",
]
