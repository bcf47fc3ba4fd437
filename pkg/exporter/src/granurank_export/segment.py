"""Deterministic sentence segmentation and proposition-token alignment.

Pure text utilities — no model or tensor dependencies — so alignment
behavior can be tested and reasoned about in isolation.
"""

from __future__ import annotations

import re

_BOUNDARY = re.compile(r"[.!?]+(?:\s+|$)")


def sentence_char_ranges(text: str) -> list[tuple[int, int]]:
    """Character ranges of sentences, split after runs of ``.!?``.

    Ranges are trimmed of surrounding whitespace and returned in order;
    text without terminal punctuation forms one final sentence.
    """
    ranges: list[tuple[int, int]] = []

    def push(lo: int, hi: int) -> None:
        chunk = text[lo:hi]
        stripped = chunk.strip()
        if stripped:
            start = lo + (len(chunk) - len(chunk.lstrip()))
            ranges.append((start, start + len(stripped)))

    cursor = 0
    for match in _BOUNDARY.finditer(text):
        push(cursor, match.end())
        cursor = match.end()
    push(cursor, len(text))
    return ranges


def sentence_index_for(ranges: list[tuple[int, int]], char_pos: int) -> int:
    """Index of the sentence owning ``char_pos``; positions in the gaps
    between sentences belong to the following sentence."""
    for idx, (start, end) in enumerate(ranges):
        if char_pos < end:
            return idx
    return len(ranges) - 1


def lcs_pairs(sentence_tokens: list[str], prop_tokens: list[str]) -> list[tuple[int, int]]:
    """Longest-common-subsequence pairing of proposition tokens onto
    sentence tokens, as (sentence_idx, prop_idx) pairs with both sides
    strictly increasing.

    Ties prefer the earliest sentence positions, making the result
    deterministic. Comparison is casefolded.
    """
    a = [t.casefold() for t in sentence_tokens]
    b = [t.casefold() for t in prop_tokens]
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            row[j] = nxt[j + 1] + 1 if a[i] == b[j] else max(nxt[j], row[j + 1])
    pairs: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def align_proposition(
    sentence_tokens: list[str], prop_tokens: list[str]
) -> tuple[list[int], list[str]]:
    """Token indices (into the sentence) for one proposition, plus the
    proposition tokens that found no counterpart and were dropped."""
    pairs = lcs_pairs(sentence_tokens, prop_tokens)
    matched_props = {j for _, j in pairs}
    dropped = [t for j, t in enumerate(prop_tokens) if j not in matched_props]
    return [i for i, _ in pairs], dropped
