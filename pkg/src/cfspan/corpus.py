"""Gold corpora: CSV loading, validation, statistics, splits, and tag files.

Two CSV schemas are understood.  Detection data has three columns
(``sentenceID,sentence,gold_label``); extraction data has six
(``sentenceID,sentence`` plus the four antecedent/consequent code-point
indexes, inclusive ends, ``-1/-1`` for an absent consequent).  Malformed rows
abort loading with a line number; extraction rows that parse but violate the
span conventions are quarantined into validation reports instead of being
silently dropped.

Tag files are the stacked word/tag format used to hand sentences to a
sequence tagger: one ``word<TAB>tag`` line per token (optionally a third POS
column), a blank line between sentences.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import csv

from .span_codec import Tag, TagSequence, span_pair_issues

TASK1_HEADER = ["sentenceID", "sentence", "gold_label"]
TASK2_HEADER = [
    "sentenceID",
    "sentence",
    "antecedent_startid",
    "antecedent_endid",
    "consequent_startid",
    "consequent_endid",
]


class CorpusFormatError(ValueError):
    """A corpus file is structurally malformed (wrong columns, bad cell, ...)."""


@dataclass(frozen=True)
class Task1Record:
    sentence_id: str
    text: str
    label: int


@dataclass(frozen=True)
class Task2Record:
    sentence_id: str
    text: str
    antecedent_start: int
    antecedent_end: int
    consequent_start: int
    consequent_end: int


@dataclass(frozen=True)
class Issue:
    code: str
    message: str


@dataclass
class ValidationReport:
    """Validation outcome for one record; an empty issue list means it passes."""

    record_id: str
    issues: list[Issue] = field(default_factory=list)
    severity: str = "error"

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_record(record: Task2Record) -> ValidationReport:
    """Check one extraction record against the span conventions.

    Flags inverted spans, ends at or past the text length, negative indexes
    other than ``-1``, half-sentinel pairs, and an absent antecedent (gold
    records must state the condition they are counterfactual about).
    """
    report = ValidationReport(record.sentence_id)
    length = len(record.text)
    for name, start, end in (
        ("antecedent", record.antecedent_start, record.antecedent_end),
        ("consequent", record.consequent_start, record.consequent_end),
    ):
        for code, message in span_pair_issues(start, end, length, name):
            report.issues.append(Issue(code, message))
    if record.antecedent_start == -1 and record.antecedent_end == -1:
        report.issues.append(
            Issue("antecedent_absent", "antecedent: span missing from gold record")
        )
    return report


def _read_rows(path, expected_header: list[str]):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CorpusFormatError(f"{path}: empty file, expected a header row")
        if header != expected_header:
            raise CorpusFormatError(
                f"{path}: line 1: expected header {','.join(expected_header)}, "
                f"got {','.join(header)}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != len(expected_header):
                raise CorpusFormatError(
                    f"{path}: line {reader.line_num}: expected "
                    f"{len(expected_header)} columns, got {len(row)}"
                )
            yield reader.line_num, row


def load_task1(path) -> list[Task1Record]:
    """Load a detection CSV. Labels must be exactly ``0`` or ``1``."""
    records = []
    for line_num, row in _read_rows(path, TASK1_HEADER):
        sentence_id, text, raw_label = row
        if text == "":
            raise CorpusFormatError(f"{path}: line {line_num}: empty sentence")
        if raw_label not in ("0", "1"):
            raise CorpusFormatError(
                f"{path}: line {line_num}: gold_label must be 0 or 1, got {raw_label!r}"
            )
        records.append(Task1Record(sentence_id, text, int(raw_label)))
    return records


def load_task2(path) -> tuple[list[Task2Record], list[ValidationReport]]:
    """Load an extraction CSV.

    Returns ``(records, rejects)``: rows that parse but violate the span
    conventions are returned as validation reports rather than raised, so a
    caller can count and inspect them.  Structural problems (column counts,
    non-integer indexes) still raise :class:`CorpusFormatError` with a line
    number.
    """
    records: list[Task2Record] = []
    rejects: list[ValidationReport] = []
    for line_num, row in _read_rows(path, TASK2_HEADER):
        sentence_id, text = row[0], row[1]
        if text == "":
            raise CorpusFormatError(f"{path}: line {line_num}: empty sentence")
        try:
            indexes = [int(cell) for cell in row[2:]]
        except ValueError as exc:
            raise CorpusFormatError(
                f"{path}: line {line_num}: span indexes must be integers"
            ) from exc
        record = Task2Record(sentence_id, text, *indexes)
        report = validate_record(record)
        if report.ok:
            records.append(record)
        else:
            rejects.append(report)
    return records, rejects


def write_task1(path, records: list[Task1Record]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TASK1_HEADER)
        for rec in records:
            writer.writerow([rec.sentence_id, rec.text, rec.label])


def write_task2(path, records: list[Task2Record]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TASK2_HEADER)
        for rec in records:
            writer.writerow(
                [
                    rec.sentence_id,
                    rec.text,
                    rec.antecedent_start,
                    rec.antecedent_end,
                    rec.consequent_start,
                    rec.consequent_end,
                ]
            )


@dataclass(frozen=True)
class CorpusStats:
    """Label balance and length profile of a detection corpus.

    Both imbalance views are carried side by side: ``positive_fraction``
    (positives over total) and ``positive_to_negative_ratio`` (positives over
    negatives).  Ratios are ``None`` when their denominator is zero.
    """

    total: int
    positives: int
    negatives: int
    positive_fraction: float | None
    positive_to_negative_ratio: float | None
    max_code_point_length: int
    length_threshold: int
    over_length_count: int


def corpus_stats(records: list[Task1Record], length_threshold: int = 512) -> CorpusStats:
    positives = sum(1 for r in records if r.label == 1)
    negatives = len(records) - positives
    lengths = [len(r.text) for r in records]
    return CorpusStats(
        total=len(records),
        positives=positives,
        negatives=negatives,
        positive_fraction=positives / len(records) if records else None,
        positive_to_negative_ratio=positives / negatives if negatives else None,
        max_code_point_length=max(lengths) if lengths else 0,
        length_threshold=length_threshold,
        over_length_count=sum(1 for n in lengths if n > length_threshold),
    )


def _round_half_away(value: float) -> int:
    return int(math.floor(value + 0.5)) if value >= 0 else -int(math.floor(-value + 0.5))


def stratified_split(records, holdout_fraction: float, seed: int, key=None):
    """Split records into (train, validation) preserving per-class proportions.

    The total holdout size is ``holdout_fraction`` of the corpus rounded half
    away from zero; per-class counts are allocated by largest remainder so
    they sum exactly to that total.  Membership is drawn with
    ``random.Random(seed)`` (seeded Mersenne Twister), so the same seed always
    yields the same split and a different seed permutes membership without
    changing per-class counts.  Both outputs preserve the input order.

    ``key`` extracts the stratification class; by default it reads a
    ``label`` attribute and falls back to a single stratum.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    if key is None:
        key = lambda r: getattr(r, "label", 0)
    by_class: dict = {}
    order: list = []
    for i, rec in enumerate(records):
        k = key(rec)
        if k not in by_class:
            by_class[k] = []
            order.append(k)
        by_class[k].append(i)

    total_holdout = _round_half_away(len(records) * holdout_fraction)
    counts: dict = {}
    remainders = []
    for pos, k in enumerate(order):
        quota = len(by_class[k]) * holdout_fraction
        counts[k] = int(math.floor(quota))
        remainders.append((-(quota - counts[k]), pos, k))
    short = total_holdout - sum(counts.values())
    for _, _, k in sorted(remainders):
        if short <= 0:
            break
        if counts[k] < len(by_class[k]):
            counts[k] += 1
            short -= 1

    rng = random.Random(seed)
    chosen: set[int] = set()
    for k in order:
        indices = list(by_class[k])
        rng.shuffle(indices)
        chosen.update(indices[: counts[k]])
    train = [rec for i, rec in enumerate(records) if i not in chosen]
    validation = [rec for i, rec in enumerate(records) if i in chosen]
    return train, validation


class NerFormatError(ValueError):
    """A stacked word/tag file is malformed."""


def write_ner(path, sentences: list[TagSequence], include_pos: bool = False) -> None:
    """Write sentences as stacked ``word<TAB>tag[<TAB>pos]`` blocks.

    Blocks are separated by one blank line; the file ends with a newline.
    Empty sentences and tokens containing tabs or line breaks cannot be
    represented and raise :class:`NerFormatError` naming the sentence.
    """
    blocks = []
    for index, sentence in enumerate(sentences):
        if len(sentence.tokens) != len(sentence.tags):
            raise NerFormatError(
                f"sentence {index}: {len(sentence.tokens)} tokens but "
                f"{len(sentence.tags)} tags"
            )
        if not sentence.tokens:
            raise NerFormatError(f"sentence {index}: empty sentence")
        if include_pos:
            if sentence.pos is None:
                raise NerFormatError(f"sentence {index}: POS column requested but absent")
            if len(sentence.pos) != len(sentence.tokens):
                raise NerFormatError(
                    f"sentence {index}: {len(sentence.tokens)} tokens but "
                    f"{len(sentence.pos)} POS tags"
                )
        lines = []
        for j, (tok, tag) in enumerate(zip(sentence.tokens, sentence.tags)):
            if tok.text == "" or any(ch in tok.text for ch in "\t\n\r"):
                raise NerFormatError(
                    f"sentence {index}: token {j} ({tok.text!r}) cannot be written"
                )
            if include_pos:
                lines.append(f"{tok.text}\t{tag.value}\t{sentence.pos[j]}")
            else:
                lines.append(f"{tok.text}\t{tag.value}")
        blocks.append("\n".join(lines))
    Path(path).write_text("\n\n".join(blocks) + "\n" if blocks else "", encoding="utf-8")


def load_ner(path) -> list[TagSequence]:
    """Read a stacked word/tag file back into sequences.

    The file stores no offsets, so tokens get canonical ones (words joined by
    single spaces).  Within a sentence every line must have the same column
    count (2, or 3 when a POS column is present).
    """
    sentences: list[TagSequence] = []
    words: list[str] = []
    tags: list[Tag] = []
    pos: list[str] = []
    has_pos: bool | None = None

    def flush() -> None:
        nonlocal words, tags, pos, has_pos
        if words:
            sentences.append(
                TagSequence.from_words(words, tags, pos if has_pos else None)
            )
        words, tags, pos, has_pos = [], [], [], None

    with open(path, encoding="utf-8") as fh:
        for line_num, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                flush()
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise NerFormatError(
                    f"{path}: line {line_num}: expected 2 or 3 tab-separated fields, "
                    f"got {len(fields)}"
                )
            line_has_pos = len(fields) == 3
            if has_pos is None:
                has_pos = line_has_pos
            elif has_pos != line_has_pos:
                raise NerFormatError(
                    f"{path}: line {line_num}: inconsistent column count within sentence"
                )
            try:
                tag = Tag.from_string(fields[1])
            except ValueError as exc:
                raise NerFormatError(f"{path}: line {line_num}: {exc}") from exc
            words.append(fields[0])
            tags.append(tag)
            if line_has_pos:
                pos.append(fields[2])
    flush()
    return sentences


__all__ = [
    "CorpusFormatError",
    "CorpusStats",
    "Issue",
    "NerFormatError",
    "TASK1_HEADER",
    "TASK2_HEADER",
    "Task1Record",
    "Task2Record",
    "ValidationReport",
    "corpus_stats",
    "load_ner",
    "load_task1",
    "load_task2",
    "stratified_split",
    "validate_record",
    "write_ner",
    "write_task1",
    "write_task2",
]
