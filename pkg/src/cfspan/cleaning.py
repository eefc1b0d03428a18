"""Sentence cleaning and augmentation merging for the detection corpus.

Cleaning exists for the detection track only: it rewrites surface text, so
running it over extraction data would silently invalidate every gold
character index.  The pipeline applies hashtag stripping, then
rare-character removal, then punctuation removal, then collapses whitespace
runs to single spaces and trims the ends — and repeats that pass until the
string stops changing, which makes the whole operation idempotent (deleting
a rare character can expose a fresh token-leading ``#``).
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

# Everything ASCII string.punctuation covers, plus the common curly quotes,
# dashes and ellipsis seen in scraped text. Apostrophes are included, so
# "it's" cleans to "its".
PUNCTUATION_CHARS = frozenset(string.punctuation) | frozenset("’‘“”„–—…")

_HASHTAG_RUN = re.compile(r"(?<!\S)#+")


@dataclass(frozen=True)
class CleanOptions:
    strip_punctuation: bool = False
    strip_rare_characters: bool = False
    strip_hashtags: bool = False


def _allowed(ch: str) -> bool:
    # Whitespace survives the rare-character stage; the final collapse
    # normalises it, so words separated by tabs or newlines never fuse.
    return ch.isalpha() or ch.isdigit() or ch.isspace() or ch in PUNCTUATION_CHARS


def _clean_pass(text: str, options: CleanOptions) -> str:
    if options.strip_hashtags:
        text = _HASHTAG_RUN.sub("", text)
    if options.strip_rare_characters:
        text = "".join(ch for ch in text if _allowed(ch))
    if options.strip_punctuation:
        text = "".join(ch for ch in text if ch not in PUNCTUATION_CHARS)
    return " ".join(text.split())


def clean_text(text: str, options: CleanOptions | None = None) -> str:
    """Clean one sentence. With default options only whitespace is normalised.

    Idempotent: ``clean_text(clean_text(s, o), o) == clean_text(s, o)``.
    """
    if options is None:
        options = CleanOptions()
    previous = None
    while text != previous:
        previous = text
        text = _clean_pass(text, options)
    return text


_DEDUP_OPTIONS = CleanOptions(
    strip_punctuation=True, strip_rare_characters=True, strip_hashtags=True
)


def _dedup_key(text: str) -> str:
    return clean_text(text, _DEDUP_OPTIONS).lower()


@dataclass(frozen=True)
class AugmentReport:
    """Outcome of merging augmented rows into a base corpus.

    ``added + duplicates_skipped`` always equals the number of augmented rows
    offered.  ``label_delta`` counts the added rows per class.
    """

    added: int
    duplicates_skipped: int
    label_delta: dict[int, int] = field(default_factory=dict)


def merge_augmented(base, augmented, dedup: bool = True):
    """Append augmented detection records to a base corpus.

    With ``dedup`` on, an augmented row is skipped when its cleaned,
    lowercased text already occurs in the base corpus or earlier in the
    augmented batch.  Returns ``(merged_records, AugmentReport)``; the base
    rows always come through untouched and in order.
    """
    merged = list(base)
    seen = {_dedup_key(rec.text) for rec in base} if dedup else set()
    added = 0
    skipped = 0
    label_delta: dict[int, int] = {}
    for rec in augmented:
        if dedup:
            key = _dedup_key(rec.text)
            if key in seen:
                skipped += 1
                continue
            seen.add(key)
        merged.append(rec)
        added += 1
        label_delta[rec.label] = label_delta.get(rec.label, 0) + 1
    return merged, AugmentReport(added, skipped, label_delta)


def truncate_tokens(tokens: list, max_length: int) -> list:
    """Keep the first ``max_length`` items of a token sequence."""
    if max_length < 1:
        raise ValueError(f"max_length must be >= 1, got {max_length}")
    return list(tokens[:max_length])


__all__ = [
    "AugmentReport",
    "CleanOptions",
    "PUNCTUATION_CHARS",
    "clean_text",
    "merge_augmented",
    "truncate_tokens",
]
