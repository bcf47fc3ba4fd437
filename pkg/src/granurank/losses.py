"""Distillation losses over ranking scores at two granularities.

The stack has three layers: a forward KL between teacher and student score
softmaxes over the candidate passages, the same construction within each
passage over its sentences, and an aggregation of the per-passage sentence
losses weighted by the softmax of the teacher's passage scores. The total
objective is the plain sum of the passage term and the aggregated sentence
term.

Everything here is score-in, loss-out: encoders live elsewhere, so the same
functions serve both fixed-embedding evaluation and the toy training loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import DataError, Marker, PassageRecord, QueryEncoding, RankingConfig
from .scorer import maxsim, score_sentence_in_passage


@dataclass(frozen=True)
class PassageSet:
    """One query's candidate list: by construction one positive plus sampled
    negatives, although the losses never look at labels, only teacher scores."""

    query_id: str
    passages: tuple[PassageRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "passages", tuple(self.passages))
        if len(self.passages) < 2:
            raise DataError(f"passage set needs >= 2 passages, got {len(self.passages)}")


@dataclass(frozen=True)
class TeacherScores:
    """Supervision scores: one real per passage, one real per sentence."""

    passage_scores: tuple[float, ...]
    sentence_scores: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        psg = tuple(float(s) for s in self.passage_scores)
        sent = tuple(tuple(float(s) for s in row) for row in self.sentence_scores)
        for v in psg:
            if not math.isfinite(v):
                raise DataError("teacher passage score is not finite")
        for row in sent:
            for v in row:
                if not math.isfinite(v):
                    raise DataError("teacher sentence score is not finite")
        object.__setattr__(self, "passage_scores", psg)
        object.__setattr__(self, "sentence_scores", sent)


@dataclass(frozen=True)
class LossReport:
    l_psg: float
    per_passage_l_s: tuple[float, ...]
    l_sent: float
    total: float


class StudentScorer(Protocol):
    """Score provider for the student side of the distillation."""

    def passage_scores(self, passages: Sequence[PassageRecord]) -> Sequence[float]: ...

    def sentence_scores(self, passages: Sequence[PassageRecord]) -> Sequence[Sequence[float]]: ...


@dataclass(frozen=True)
class EmbeddingStudent:
    """Student scorer backed by fixed query encodings: passage scores come
    from the default-marker encoding, sentence scores from the
    sentence-marker encoding."""

    query_default: QueryEncoding
    query_sentence: QueryEncoding

    def __post_init__(self) -> None:
        if self.query_default.marker is not Marker.PASSAGE:
            raise DataError("marker mismatch: passage-side encoding must use the passage marker")
        if self.query_sentence.marker is not Marker.SENTENCE:
            raise DataError("marker mismatch: sentence-side encoding must use the sentence marker")

    def passage_scores(self, passages: Sequence[PassageRecord]) -> list[float]:
        return [maxsim(self.query_default, p.embeddings) for p in passages]

    def sentence_scores(self, passages: Sequence[PassageRecord]) -> list[list[float]]:
        return [
            [score_sentence_in_passage(self.query_sentence, p, j) for j in range(len(p.sentences))]
            for p in passages
        ]


def softmax_dist(scores: Sequence[float], temperature: float = 1.0) -> np.ndarray:
    """Softmax of scores / temperature, computed with max-subtraction."""
    if len(scores) == 0:
        raise DataError("softmax of empty score list")
    if temperature <= 0:
        raise DataError(f"temperature must be > 0, got {temperature}")
    arr = np.asarray(scores, dtype=np.float64) / temperature
    if not np.all(np.isfinite(arr)):
        raise DataError("softmax input is not finite")
    shifted = arr - arr.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _check_distribution(p: np.ndarray, name: str) -> None:
    if np.any(p < 0) or np.any(p > 1):
        raise DataError(f"{name} distribution has entries outside [0, 1]")
    if abs(float(p.sum()) - 1.0) > 1e-6:
        raise DataError(f"{name} distribution sums to {float(p.sum())}, expected 1")


def kl_div(teacher: Sequence[float], student: Sequence[float]) -> float:
    """Forward KL divergence, teacher-first: sum of t * ln(t / s).

    Zero teacher entries contribute nothing; a zero student entry under
    nonzero teacher mass has no finite value and is rejected.
    """
    t = np.asarray(teacher, dtype=np.float64)
    s = np.asarray(student, dtype=np.float64)
    if t.shape != s.shape or t.ndim != 1:
        raise DataError(f"length mismatch: teacher {t.shape} vs student {s.shape}")
    _check_distribution(t, "teacher")
    _check_distribution(s, "student")
    acc = 0.0
    for ti, si in zip(t, s):
        if ti == 0.0:
            continue
        if si == 0.0:
            raise DataError("support mismatch: student assigns zero mass where teacher does not")
        acc += ti * math.log(ti / si)
    # Gibbs' inequality guarantees nonnegativity; clip float residue.
    return float(max(0.0, acc))


def passage_loss(
    student_scores: Sequence[float],
    teacher_scores: Sequence[float],
    temperature: float = 1.0,
) -> float:
    """KL between the teacher and student passage-score softmaxes."""
    if len(student_scores) != len(teacher_scores):
        raise DataError(
            f"length mismatch: {len(student_scores)} student vs {len(teacher_scores)} teacher scores"
        )
    return kl_div(softmax_dist(teacher_scores, temperature), softmax_dist(student_scores, temperature))


def sentence_loss_per_passage(
    student_sentence_scores: Sequence[float],
    teacher_sentence_scores: Sequence[float],
    temperature: float = 1.0,
) -> float:
    """Within-passage KL over the sentence distribution.

    A single-sentence passage has the degenerate distribution [1] on both
    sides, so its loss is identically 0; it contributes nothing rather than
    being skipped.
    """
    return passage_loss(student_sentence_scores, teacher_sentence_scores, temperature)


def aggregate_sentence_loss(
    per_passage_l_s: Sequence[float],
    teacher_passage_scores: Sequence[float],
    temperature: float = 1.0,
) -> float:
    """Convex combination of per-passage sentence losses, weighted by the
    softmax of the teacher's passage scores."""
    if len(per_passage_l_s) != len(teacher_passage_scores):
        raise DataError(
            f"length mismatch: {len(per_passage_l_s)} losses vs {len(teacher_passage_scores)} scores"
        )
    weights = softmax_dist(teacher_passage_scores, temperature)
    return float(np.dot(weights, np.asarray(per_passage_l_s, dtype=np.float64)))


def total_loss(
    passage_set: PassageSet,
    teacher: TeacherScores,
    student: StudentScorer,
    cfg: RankingConfig,
) -> LossReport:
    """Full objective: passage-level KL plus teacher-weighted sentence KL."""
    passages = passage_set.passages
    if len(teacher.passage_scores) != len(passages):
        raise DataError(
            f"length mismatch: {len(teacher.passage_scores)} teacher passage scores "
            f"for {len(passages)} passages"
        )
    for i, (p, row) in enumerate(zip(passages, teacher.sentence_scores)):
        if len(row) != len(p.sentences):
            raise DataError(
                f"length mismatch: passage '{p.id}' has {len(p.sentences)} sentences, "
                f"teacher row {i} has {len(row)} scores"
            )
    if len(teacher.sentence_scores) != len(passages):
        raise DataError(
            f"length mismatch: {len(teacher.sentence_scores)} teacher sentence rows "
            f"for {len(passages)} passages"
        )

    student_psg = list(student.passage_scores(passages))
    student_sent = [list(row) for row in student.sentence_scores(passages)]
    if len(student_psg) != len(passages) or len(student_sent) != len(passages):
        raise DataError("student scorer returned misaligned scores")

    t = cfg.temperature
    l_psg = passage_loss(student_psg, teacher.passage_scores, t)
    per_l_s = tuple(
        sentence_loss_per_passage(student_sent[i], teacher.sentence_scores[i], t)
        for i in range(len(passages))
    )
    l_sent = aggregate_sentence_loss(per_l_s, teacher.passage_scores, t)
    return LossReport(l_psg=l_psg, per_passage_l_s=per_l_s, l_sent=l_sent, total=l_psg + l_sent)
