"""Exact MaxSim scoring at every granularity, plus cross-candidate ranking.

The one primitive is MaxSim: for each query token take the best dot product
against the unit's token rows, then sum over query tokens. Scoring a
sentence or proposition restricts the unit rows to that span of the passage
encoding; the passage encoding itself is never re-computed, so one index
serves every granularity.

Scores are accumulated in double precision regardless of storage precision.
All ranking functions are pure and deterministic: ties in the per-token max
go to the lowest token index, ties in rankings break by passage id (then
unit index).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    EmbeddingMatrix,
    Marker,
    PassageRecord,
    QueryEncoding,
    RankingConfig,
    span_slice,
)


@dataclass(frozen=True)
class ScoreBreakdown:
    """Per-query-token max values and the passage-token index achieving each.

    Argmax indices are absolute positions in the scored passage's token
    sequence, even when the scored unit was a span or mask. The values sum
    to the unit's raw MaxSim score (not to any combined score).
    """

    per_query_token_max: tuple[float, ...]
    per_query_token_argmax: tuple[int, ...]


@dataclass(frozen=True)
class ScoredUnit:
    """One ranked unit: a passage, or a sentence/proposition inside one."""

    passage_id: str
    unit_kind: str  # "passage" | "sentence" | "proposition"
    unit_index: int | None
    score: float
    breakdown: ScoreBreakdown | None = None

    def unit_label(self) -> str:
        if self.unit_kind == "passage":
            return "passage"
        return f"{self.unit_kind}:{self.unit_index}"


def maxsim_rows(
    query_rows: EmbeddingMatrix,
    unit_rows: EmbeddingMatrix,
    with_breakdown: bool = False,
) -> float | tuple[float, ScoreBreakdown]:
    """MaxSim between raw row matrices (query side need not be a full query)."""
    if query_rows.dim != unit_rows.dim:
        raise DataError(f"dim mismatch: query dim {query_rows.dim} vs unit dim {unit_rows.dim}")
    sims = query_rows.data @ unit_rows.data.T
    per_max = sims.max(axis=1)
    score = float(per_max.sum())
    if not with_breakdown:
        return score
    per_arg = sims.argmax(axis=1)  # first occurrence, i.e. lowest token index
    breakdown = ScoreBreakdown(
        per_query_token_max=tuple(float(v) for v in per_max),
        per_query_token_argmax=tuple(int(i) for i in per_arg),
    )
    return score, breakdown


def maxsim(
    query: QueryEncoding,
    unit_rows: EmbeddingMatrix,
    with_breakdown: bool = False,
) -> float | tuple[float, ScoreBreakdown]:
    """MaxSim of a full query encoding against a unit's token rows."""
    return maxsim_rows(query.embeddings, unit_rows, with_breakdown=with_breakdown)


def _require_marker(query: QueryEncoding, expected: Marker, context: str) -> None:
    if query.marker is not expected:
        raise DataError(
            f"marker mismatch: {context} needs the {expected.value} marker, got {query.marker.value}"
        )


def _shift_breakdown(breakdown: ScoreBreakdown, offsets: Sequence[int]) -> ScoreBreakdown:
    return ScoreBreakdown(
        per_query_token_max=breakdown.per_query_token_max,
        per_query_token_argmax=tuple(offsets[i] for i in breakdown.per_query_token_argmax),
    )


def score_sentence_in_passage(
    query_prime: QueryEncoding,
    passage: PassageRecord,
    sentence_idx: int,
    with_breakdown: bool = False,
) -> float | tuple[float, ScoreBreakdown]:
    """In-passage sentence score: MaxSim restricted to the sentence's rows.

    Requires the sentence-marker query encoding; the passage encoding is the
    same one used for passage-level scoring.
    """
    _require_marker(query_prime, Marker.SENTENCE, "sentence scoring")
    if not (0 <= sentence_idx < len(passage.sentences)):
        raise DataError(f"invalid sentence index {sentence_idx} for passage '{passage.id}'")
    span = passage.sentences[sentence_idx]
    rows = span_slice(passage.embeddings, span)
    result = maxsim_rows(query_prime.embeddings, rows, with_breakdown=with_breakdown)
    if not with_breakdown:
        return result
    score, breakdown = result
    offsets = range(span.start, span.end)
    return score, _shift_breakdown(breakdown, offsets)


def combined_sentence_score(
    query_prime: QueryEncoding,
    query_default: QueryEncoding,
    passage: PassageRecord,
    sentence_idx: int,
    cfg: RankingConfig,
) -> float:
    """Cross-passage sentence score: in-passage score plus alpha times the
    passage score, each computed with its own marker variant."""
    _require_marker(query_prime, Marker.SENTENCE, "sentence scoring")
    _require_marker(query_default, Marker.PASSAGE, "passage scoring")
    if query_prime.id != query_default.id:
        raise DataError(f"query id mismatch: '{query_prime.id}' vs '{query_default.id}'")
    sentence = score_sentence_in_passage(query_prime, passage, sentence_idx)
    passage_score = maxsim(query_default, passage.embeddings)
    return sentence + cfg.alpha * passage_score


def score_proposition(
    query: QueryEncoding,
    passage: PassageRecord,
    prop_idx: int,
    with_breakdown: bool = False,
) -> float | tuple[float, ScoreBreakdown]:
    """MaxSim restricted to a proposition's masked rows.

    Proposition-level ranking runs on the default (passage) marker, so that
    variant is asserted here.
    """
    _require_marker(query, Marker.PASSAGE, "proposition scoring")
    if not (0 <= prop_idx < len(passage.propositions)):
        raise DataError(f"invalid proposition index {prop_idx} for passage '{passage.id}'")
    mask = passage.propositions[prop_idx]
    if mask.token_indices[-1] >= passage.embeddings.rows:
        raise DataError(f"invalid mask: token {mask.token_indices[-1]} out of range in '{passage.id}'")
    rows = span_slice(passage.embeddings, mask)
    result = maxsim_rows(query.embeddings, rows, with_breakdown=with_breakdown)
    if not with_breakdown:
        return result
    score, breakdown = result
    return score, _shift_breakdown(breakdown, mask.token_indices)


def rank_passages(
    query_default: QueryEncoding,
    candidates: Sequence[PassageRecord],
    with_breakdown: bool = False,
) -> list[ScoredUnit]:
    """Score every candidate passage and sort descending (ties by id)."""
    _require_marker(query_default, Marker.PASSAGE, "passage scoring")
    units: list[ScoredUnit] = []
    for passage in candidates:
        if with_breakdown:
            score, breakdown = maxsim(query_default, passage.embeddings, with_breakdown=True)
        else:
            score, breakdown = maxsim(query_default, passage.embeddings), None
        units.append(ScoredUnit(passage.id, "passage", None, score, breakdown))
    units.sort(key=lambda u: (-u.score, u.passage_id))
    return units


def rank_sentences(
    query_prime: QueryEncoding,
    query_default: QueryEncoding,
    candidates: Sequence[PassageRecord],
    cfg: RankingConfig,
    with_breakdown: bool = False,
) -> list[ScoredUnit]:
    """Rank every sentence of every candidate by the combined score.

    The attached breakdown (if requested) explains the raw in-passage
    sentence MaxSim, not the combined value.
    """
    _require_marker(query_prime, Marker.SENTENCE, "sentence scoring")
    _require_marker(query_default, Marker.PASSAGE, "passage scoring")
    if query_prime.id != query_default.id:
        raise DataError(f"query id mismatch: '{query_prime.id}' vs '{query_default.id}'")
    units: list[ScoredUnit] = []
    for passage in candidates:
        passage_score = maxsim(query_default, passage.embeddings)
        for idx in range(len(passage.sentences)):
            if with_breakdown:
                sent_score, breakdown = score_sentence_in_passage(
                    query_prime, passage, idx, with_breakdown=True
                )
            else:
                sent_score, breakdown = score_sentence_in_passage(query_prime, passage, idx), None
            combined = sent_score + cfg.alpha * passage_score
            units.append(ScoredUnit(passage.id, "sentence", idx, combined, breakdown))
    units.sort(key=lambda u: (-u.score, u.passage_id, u.unit_index))
    return units


def rank_propositions(
    query_default: QueryEncoding,
    candidates: Sequence[PassageRecord],
    with_breakdown: bool = False,
) -> list[ScoredUnit]:
    """Rank every proposition of every candidate by masked MaxSim."""
    _require_marker(query_default, Marker.PASSAGE, "proposition scoring")
    units: list[ScoredUnit] = []
    for passage in candidates:
        for idx in range(len(passage.propositions)):
            if with_breakdown:
                score, breakdown = score_proposition(query_default, passage, idx, with_breakdown=True)
            else:
                score, breakdown = score_proposition(query_default, passage, idx), None
            units.append(ScoredUnit(passage.id, "proposition", idx, score, breakdown))
    units.sort(key=lambda u: (-u.score, u.passage_id, u.unit_index))
    return units


def passage_score_from_sentence_encoding(
    query: QueryEncoding,
    sentence_records: Sequence[PassageRecord],
) -> float:
    """Passage score when the index was encoded sentence-by-sentence: the max
    of the member sentences' MaxSim scores."""
    if not sentence_records:
        raise DataError("empty sentence group")
    return max(maxsim(query, rec.embeddings) for rec in sentence_records)


def breakdown_record(query_id: str, unit: ScoredUnit) -> dict:
    """JSON-ready heatmap record for one scored unit (requires a breakdown)."""
    if unit.breakdown is None:
        raise DataError(f"no breakdown recorded for {unit.passage_id}/{unit.unit_label()}")
    return {
        "query_id": query_id,
        "passage_id": unit.passage_id,
        "unit": unit.unit_label(),
        "score": unit.score,
        "per_token_max": list(unit.breakdown.per_query_token_max),
        "per_token_argmax": list(unit.breakdown.per_query_token_argmax),
    }
