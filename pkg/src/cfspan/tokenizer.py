"""Offset-preserving tokenization and length-bounded subword splitting.

The tokenizer is deliberately tiny: maximal runs of alphanumeric code points
become one token each, every other non-whitespace code point becomes a
single-character token, and whitespace only separates.  What matters is that
every token carries inclusive code-point offsets into its sentence, so the
span codec never has to search the surface string for a substring (which
breaks as soon as a word repeats).

Subword pieces model the mismatch between word tokens and a model-side
vocabulary without needing a learned vocabulary: a greedy left-to-right
split into pieces of at most ``max_piece`` code points.
"""

from __future__ import annotations

from dataclasses import dataclass


class AlignmentError(ValueError):
    """Subword pieces cannot be reconciled with their source tokens."""


@dataclass(frozen=True)
class Token:
    """A surface token with inclusive code-point offsets into its sentence.

    ``sentence[start : end + 1] == text`` always holds for tokens produced by
    :func:`tokenize`.
    """

    text: str
    start: int
    end: int


@dataclass(frozen=True)
class SubwordPiece:
    """One piece of a split token.

    ``parent`` is the index of the source token in its sentence;
    ``piece_index`` is the piece's position within that token (0 = first).
    """

    text: str
    parent: int
    piece_index: int


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into offset-carrying tokens.

    Maximal alphanumeric runs (``str.isalnum``; underscore is not
    alphanumeric) form one token, any other non-whitespace code point is a
    token by itself, and whitespace emits nothing.  Offsets are inclusive,
    so ``text[t.start : t.end + 1] == t.text``.
    """
    tokens: list[Token] = []
    run_start: int | None = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if run_start is not None:
                tokens.append(Token(text[run_start:i], run_start, i - 1))
                run_start = None
        elif ch.isalnum():
            if run_start is None:
                run_start = i
        else:
            if run_start is not None:
                tokens.append(Token(text[run_start:i], run_start, i - 1))
                run_start = None
            tokens.append(Token(ch, i, i))
    if run_start is not None:
        tokens.append(Token(text[run_start:], run_start, len(text) - 1))
    return tokens


def subword_split(token: Token, max_piece: int, parent: int = 0) -> list[SubwordPiece]:
    """Split one token greedily into pieces of at most ``max_piece`` code points.

    The concatenated piece texts always equal ``token.text``; every piece but
    the last has exactly ``max_piece`` code points.
    """
    if max_piece < 1:
        raise ValueError(f"max_piece must be >= 1, got {max_piece}")
    return [
        SubwordPiece(token.text[i : i + max_piece], parent, j)
        for j, i in enumerate(range(0, len(token.text), max_piece))
    ]


def split_sequence(tokens: list[Token], max_piece: int) -> list[SubwordPiece]:
    """Split every token in a sentence, tagging pieces with their parent index."""
    pieces: list[SubwordPiece] = []
    for idx, token in enumerate(tokens):
        pieces.extend(subword_split(token, max_piece, parent=idx))
    return pieces


def align_pieces_to_tokens(
    pieces: list[SubwordPiece], tokens: list[Token]
) -> dict[int, int]:
    """Map each piece index to the index of the token it came from.

    Verifies that the pieces are a faithful split of ``tokens``: every token
    is covered by a contiguous, in-order block of pieces whose texts
    concatenate back to the token text.  Orphan pieces (parent index out of
    range) and broken concatenations raise :class:`AlignmentError`.
    """
    mapping: dict[int, int] = {}
    grouped: dict[int, list[SubwordPiece]] = {}
    last_parent = -1
    for i, piece in enumerate(pieces):
        if not 0 <= piece.parent < len(tokens):
            raise AlignmentError(
                f"piece {i} ({piece.text!r}) has no parent token: index {piece.parent}"
            )
        if piece.parent < last_parent:
            raise AlignmentError(
                f"piece {i} ({piece.text!r}) is out of order: parent {piece.parent} "
                f"after parent {last_parent}"
            )
        last_parent = piece.parent
        grouped.setdefault(piece.parent, []).append(piece)
        mapping[i] = piece.parent
    for idx, token in enumerate(tokens):
        group = grouped.get(idx)
        if not group:
            raise AlignmentError(f"token {idx} ({token.text!r}) has no pieces")
        if [p.piece_index for p in group] != list(range(len(group))):
            raise AlignmentError(f"token {idx} ({token.text!r}) has misnumbered pieces")
        joined = "".join(p.text for p in group)
        if joined != token.text:
            raise AlignmentError(
                f"token {idx}: pieces join to {joined!r}, expected {token.text!r}"
            )
    return mapping
