"""Character spans <-> per-token tag sequences.

Encoding marks every token whose character range intersects the antecedent
span with ``ante`` (tested first), then the consequent span with ``cons``;
everything else is ``0``.  Decoding forms runs of equally-tagged tokens,
optionally bridging small gaps of other tags, selects one run per class, and
reads the character indexes straight off the token offsets.  Because the
indexes come from offsets rather than from searching the sentence text, a
sentence that repeats the span's opening word still decodes to the right
place.

All indexes are Unicode code points with inclusive ends; ``-1/-1`` means the
span is absent.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

from .tokenizer import Token

RUN_LONGEST = "longest"
RUN_FIRST = "first"

ABSENT = -1

PREDICTION_HEADER = [
    "sentenceID",
    "antecedent_startid",
    "antecedent_endid",
    "consequent_startid",
    "consequent_endid",
]


class SpanValidationError(ValueError):
    """A span pair violates the index conventions."""


class Tag(enum.Enum):
    """Per-token label. Serialized forms are exactly ``ante``, ``cons``, ``0``."""

    ANTE = "ante"
    CONS = "cons"
    NONE = "0"

    @classmethod
    def from_string(cls, raw: str) -> "Tag":
        for member in cls:
            if member.value == raw:
                return member
        raise ValueError(f"unknown tag {raw!r} (expected one of: ante, cons, 0)")


@dataclass(frozen=True)
class TagSequence:
    """Tokens with one tag each, plus an optional parallel POS column."""

    tokens: list[Token]
    tags: list[Tag]
    pos: list[str] | None = None

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )
        if self.pos is not None and len(self.pos) != len(self.tokens):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.pos)} POS tags"
            )

    @classmethod
    def from_words(
        cls, words: list[str], tags: list[Tag], pos: list[str] | None = None
    ) -> "TagSequence":
        """Build a sequence with canonical offsets (words joined by single spaces)."""
        tokens = []
        cursor = 0
        for word in words:
            tokens.append(Token(word, cursor, cursor + len(word) - 1))
            cursor += len(word) + 1
        return cls(tokens, tags, pos)


@dataclass(frozen=True)
class SpanPrediction:
    """An antecedent/consequent index quadruple; ``-1/-1`` marks an absent span."""

    antecedent_start: int = ABSENT
    antecedent_end: int = ABSENT
    consequent_start: int = ABSENT
    consequent_end: int = ABSENT

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (
            self.antecedent_start,
            self.antecedent_end,
            self.consequent_start,
            self.consequent_end,
        )


@dataclass(frozen=True)
class DecodePolicy:
    """Knobs for turning tag runs back into spans.

    ``run_selection`` picks among multiple runs of one tag class: ``longest``
    takes the run covering the most characters (ties go to the earliest run),
    ``first`` takes the earliest.  ``max_bridge_gap`` merges runs separated by
    at most that many differently-tagged tokens.  With
    ``include_boundary_punctuation`` off, single-character punctuation tokens
    are trimmed from the selected run's ends.
    """

    run_selection: str = RUN_LONGEST
    max_bridge_gap: int = 1
    include_boundary_punctuation: bool = True

    def __post_init__(self) -> None:
        if self.run_selection not in (RUN_LONGEST, RUN_FIRST):
            raise ValueError(
                f"run_selection must be {RUN_LONGEST!r} or {RUN_FIRST!r}, "
                f"got {self.run_selection!r}"
            )
        if self.max_bridge_gap < 0:
            raise ValueError(f"max_bridge_gap must be >= 0, got {self.max_bridge_gap}")


def span_pair_issues(
    start: int, end: int, length: int, name: str
) -> list[tuple[str, str]]:
    """Structural problems with one (start, end) pair as (code, message) tuples."""
    issues: list[tuple[str, str]] = []
    sentinel = (start == ABSENT, end == ABSENT)
    if any(sentinel) and not all(sentinel):
        issues.append(
            ("half_sentinel", f"{name}: exactly one index is -1 ({start}, {end})")
        )
        return issues
    if all(sentinel):
        return issues
    if start < 0 or end < 0:
        issues.append(
            ("negative_index", f"{name}: negative index that is not -1 ({start}, {end})")
        )
        return issues
    if start > end:
        issues.append(("inverted", f"{name}: start {start} exceeds end {end}"))
    if end >= length:
        issues.append(
            ("end_out_of_range", f"{name}: end {end} not below text length {length}")
        )
    return issues


def _checked_pair(start: int, end: int, length: int, name: str) -> tuple[int, int] | None:
    issues = span_pair_issues(start, end, length, name)
    if issues:
        raise SpanValidationError("; ".join(msg for _, msg in issues))
    if start == ABSENT:
        return None
    return (start, end)


def encode_tags(text: str, tokens: list[Token], spans) -> TagSequence:
    """Tag each token by intersection with the antecedent/consequent spans.

    ``spans`` is anything carrying the four ``*_start``/``*_end`` attributes
    (a gold record or a :class:`SpanPrediction`).  A token is tagged ``ante``
    iff its character range intersects the antecedent span, else ``cons`` iff
    it intersects the consequent span, else ``0``.  Overlapping gold spans are
    rejected.
    """
    length = len(text)
    ante = _checked_pair(
        spans.antecedent_start, spans.antecedent_end, length, "antecedent"
    )
    cons = _checked_pair(
        spans.consequent_start, spans.consequent_end, length, "consequent"
    )
    if ante and cons and ante[0] <= cons[1] and cons[0] <= ante[1]:
        raise SpanValidationError(
            f"antecedent {ante} and consequent {cons} overlap"
        )
    tags = []
    for tok in tokens:
        if ante and tok.end >= ante[0] and tok.start <= ante[1]:
            tags.append(Tag.ANTE)
        elif cons and tok.end >= cons[0] and tok.start <= cons[1]:
            tags.append(Tag.CONS)
        else:
            tags.append(Tag.NONE)
    return TagSequence(list(tokens), tags)


def _is_punctuation(token: Token) -> bool:
    return len(token.text) == 1 and not token.text.isalnum()


def _runs(indices: list[int], gap: int) -> list[list[int]]:
    """Group sorted token indices into [first, last] runs, bridging gaps <= gap."""
    runs: list[list[int]] = []
    for idx in indices:
        if runs and idx - runs[-1][1] - 1 <= gap:
            runs[-1][1] = idx
        else:
            runs.append([idx, idx])
    return runs


def _decode_one(
    tokens: list[Token], tags: list[Tag], wanted: Tag, policy: DecodePolicy
) -> tuple[int, int]:
    indices = [i for i, tag in enumerate(tags) if tag is wanted]
    if not indices:
        return (ABSENT, ABSENT)
    runs = _runs(indices, policy.max_bridge_gap)
    if policy.run_selection == RUN_FIRST:
        lo, hi = runs[0]
    else:
        # Longest by character extent; ties go to the earliest run.
        lo, hi = max(runs, key=lambda r: (tokens[r[1]].end - tokens[r[0]].start, -r[0]))
    if not policy.include_boundary_punctuation:
        while lo <= hi and _is_punctuation(tokens[lo]):
            lo += 1
        while hi >= lo and _is_punctuation(tokens[hi]):
            hi -= 1
        if lo > hi:
            return (ABSENT, ABSENT)
    return (tokens[lo].start, tokens[hi].end)


def decode_spans(
    text: str, sequence: TagSequence, policy: DecodePolicy | None = None
) -> SpanPrediction:
    """Recover character spans from a tagged token sequence.

    ``text`` is only consulted for bounds sanity; the returned indexes come
    from the token offsets.  An all-``0`` sequence (or an empty one) decodes
    to two absent spans.
    """
    if policy is None:
        policy = DecodePolicy()
    for tok in sequence.tokens:
        if tok.start < 0 or tok.end >= len(text):
            raise SpanValidationError(
                f"token {tok.text!r} offsets ({tok.start}, {tok.end}) fall outside "
                f"text of length {len(text)}"
            )
    ante = _decode_one(sequence.tokens, sequence.tags, Tag.ANTE, policy)
    cons = _decode_one(sequence.tokens, sequence.tags, Tag.CONS, policy)
    return SpanPrediction(ante[0], ante[1], cons[0], cons[1])


def merge_subword_tags(
    piece_tags: list[Tag],
    mapping: dict[int, int],
    strategy: str = "first_piece",
    n_tokens: int | None = None,
) -> list[Tag]:
    """Collapse piece-level tags back to one tag per token.

    ``mapping`` maps piece index -> token index (see
    :func:`cfspan.tokenizer.align_pieces_to_tokens`).  ``first_piece`` takes
    each token's first piece's tag; ``majority`` takes the modal tag, ties
    broken toward the tag whose earliest piece comes first.
    """
    if strategy not in ("first_piece", "majority"):
        raise ValueError(f"unknown merge strategy {strategy!r}")
    if len(piece_tags) != len(mapping):
        raise ValueError(
            f"{len(piece_tags)} piece tags but mapping covers {len(mapping)} pieces"
        )
    if n_tokens is None:
        n_tokens = max(mapping.values()) + 1 if mapping else 0
    per_token: dict[int, list[Tag]] = {}
    for piece_index in sorted(mapping):
        token_index = mapping[piece_index]
        if not 0 <= token_index < n_tokens:
            raise ValueError(f"mapping sends piece {piece_index} to bad token {token_index}")
        per_token.setdefault(token_index, []).append(piece_tags[piece_index])
    merged: list[Tag] = []
    for token_index in range(n_tokens):
        group = per_token.get(token_index)
        if not group:
            raise ValueError(f"token {token_index} has zero pieces")
        if strategy == "first_piece":
            merged.append(group[0])
        else:
            counts: dict[Tag, int] = {}
            for tag in group:
                counts[tag] = counts.get(tag, 0) + 1
            best = max(counts.values())
            # Earliest piece whose tag is among the tied leaders wins.
            merged.append(next(tag for tag in group if counts[tag] == best))
    return merged


def write_predictions(path, rows: list[tuple[str, SpanPrediction]]) -> None:
    """Write ``sentenceID`` + index quadruples as a prediction CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTION_HEADER)
        for sentence_id, pred in rows:
            writer.writerow([sentence_id, *pred.as_tuple()])


def load_predictions(path) -> list[tuple[str, SpanPrediction]]:
    """Read a prediction CSV written by :func:`write_predictions`."""
    rows: list[tuple[str, SpanPrediction]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PREDICTION_HEADER:
            raise SpanValidationError(
                f"{path}: expected header {','.join(PREDICTION_HEADER)}"
            )
        for row in reader:
            if not row:
                continue
            if len(row) != 5:
                raise SpanValidationError(
                    f"{path}: row {reader.line_num}: expected 5 columns, got {len(row)}"
                )
            try:
                indexes = [int(cell) for cell in row[1:]]
            except ValueError as exc:
                raise SpanValidationError(
                    f"{path}: row {reader.line_num}: non-integer index"
                ) from exc
            rows.append((row[0], SpanPrediction(*indexes)))
    return rows


__all__ = [
    "ABSENT",
    "DecodePolicy",
    "PREDICTION_HEADER",
    "RUN_FIRST",
    "RUN_LONGEST",
    "SpanPrediction",
    "SpanValidationError",
    "Tag",
    "TagSequence",
    "decode_spans",
    "encode_tags",
    "load_predictions",
    "merge_subword_tags",
    "span_pair_issues",
    "write_predictions",
]
