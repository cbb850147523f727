"""Rule-based sentence segmentation.

The engine, the evaluation pipeline and any conforming backend all use the
same boundary rules: split after '.', '!' or '?' when followed by whitespace
or end of text, except when the period terminates a whitelisted abbreviation.
A period between two digits ("3.5") is never followed by whitespace, so
decimals never split.  Each returned sentence has its internal whitespace
collapsed to single spaces, which makes ``join_sentences`` the exact inverse
on well-formed input.
"""

from __future__ import annotations

_TERMINALS = ".!?"

# Words whose trailing period does not end a sentence (compared lowercase).
ABBREVIATIONS = frozenset({"mr.", "mrs.", "dr.", "st.", "e.g.", "i.e.", "etc."})

_OPENERS = "([{\"'"


def _is_abbreviation(text: str, dot_index: int) -> bool:
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start : dot_index + 1].lstrip(_OPENERS)
    return word.lower() in ABBREVIATIONS


def segment_sentences(text: str) -> list[str]:
    """Split ``text`` into sentences; empty input yields an empty list."""
    sentences: list[str] = []
    begin = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINALS:
            continue
        if i + 1 < n and not text[i + 1].isspace():
            continue
        if ch == "." and _is_abbreviation(text, i):
            continue
        piece = " ".join(text[begin : i + 1].split())
        if piece:
            sentences.append(piece)
        begin = i + 1
    tail = " ".join(text[begin:].split())
    if tail:
        sentences.append(tail)
    return sentences


def join_sentences(sentences: list[str] | tuple[str, ...]) -> str:
    """Join sentences with single spaces; rejects empty members."""
    for s in sentences:
        if not s or not s.strip():
            raise ValueError("cannot join empty sentences")
    return " ".join(sentences)
