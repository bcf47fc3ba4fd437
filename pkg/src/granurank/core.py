"""Shared domain types and span arithmetic for the ranking engine.

Everything downstream (storage, scoring, training, citation) works over the
types here. All types are immutable after construction and safe to share
across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

UNIT_NORM_TOL = 1e-4


class DataError(ValueError):
    """Input data violates a contract (bad spans, wrong marker, corrupt file)."""


class Marker(Enum):
    """Query marker variant baked into an encoding.

    PASSAGE is the default marker, used for passage-level and
    proposition-level scoring. SENTENCE is the dedicated marker that signals
    in-passage sentence-level scoring.
    """

    PASSAGE = "passage"
    SENTENCE = "sentence"


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Token-level embedding rows for one query or one retrieval unit.

    Rows must be unit-normalized so that a plain dot product is a cosine.
    Non-normalized rows are rejected rather than silently renormalized, so
    a matrix loaded twice is bit-identical to what was stored.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"embedding matrix needs rows >= 1 and dim >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("embedding matrix contains non-finite entries")
        norms = np.linalg.norm(arr, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
        if bad.size:
            raise DataError(
                f"embedding row {bad[0]} has norm {norms[bad[0]]:.6f}, expected 1.0 within {UNIT_NORM_TOL}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(rows={self.rows}, dim={self.dim})"


@dataclass(frozen=True)
class SentenceSpan:
    """Half-open token range [start, end) of one sentence inside a passage."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise DataError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class PropositionMask:
    """Token mask of one proposition, aligned to a sentence of the passage.

    Masks are alignments, not partitions: two propositions of the same
    sentence may share tokens.
    """

    sentence_idx: int
    token_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(t) for t in self.token_indices)
        if not idx:
            raise DataError("proposition mask is empty")
        if any(t < 0 for t in idx):
            raise DataError("proposition mask has negative token index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError("proposition mask token indices must be strictly increasing")
        object.__setattr__(self, "token_indices", idx)


@dataclass(frozen=True)
class PassageRecord:
    """One encoded retrieval unit: embeddings plus hierarchical span metadata.

    Structural problems (overlapping spans, out-of-range masks) are reported
    by :func:`validate_passage` rather than raised at construction, so bad
    data can be inspected instead of lost.
    """

    id: str
    embeddings: EmbeddingMatrix
    sentences: tuple[SentenceSpan, ...]
    propositions: tuple[PropositionMask, ...] = ()
    text: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        object.__setattr__(self, "propositions", tuple(self.propositions))


@dataclass(frozen=True)
class QueryEncoding:
    """Marker-conditioned query token vectors.

    The marker is recorded explicitly so scoring code can assert it received
    the right variant instead of trusting the caller.
    """

    id: str
    marker: Marker
    embeddings: EmbeddingMatrix


@dataclass(frozen=True)
class RankingConfig:
    """Knobs shared by ranking and citation.

    alpha weighs the passage score mixed into cross-passage sentence scores;
    citation_margin is the top-vs-runner-up score gap required to emit a
    citation; temperature scales every softmax in the loss stack.
    """

    alpha: float = 1.0
    citation_margin: float = 1.0
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise DataError(f"alpha must be >= 0, got {self.alpha}")
        if self.citation_margin < 0:
            raise DataError(f"citation_margin must be >= 0, got {self.citation_margin}")
        if self.temperature <= 0:
            raise DataError(f"temperature must be > 0, got {self.temperature}")


def validate_passage(record: PassageRecord) -> list[str]:
    """Check all structural invariants of a passage record.

    Returns a list of human-readable violations (empty when the record is
    well-formed). Violations are data, not failures: nothing is raised.
    """
    violations: list[str] = []
    n = record.embeddings.rows

    if not record.sentences:
        violations.append("sentences: empty, spans must cover all tokens")
    expected_start = 0
    for i, span in enumerate(record.sentences):
        if span.end > n:
            violations.append(f"sentences[{i}]: span [{span.start}, {span.end}) out of range for {n} tokens")
            expected_start = span.end
            continue
        if span.start < expected_start:
            violations.append(f"sentences[{i}]: overlapping spans at index {i}")
        elif span.start > expected_start:
            violations.append(f"sentences[{i}]: gap before span, expected start {expected_start}")
        expected_start = span.end
    if record.sentences and record.sentences[-1].end < n and all(s.end <= n for s in record.sentences):
        violations.append(f"sentences: spans end at {record.sentences[-1].end}, do not cover all {n} tokens")

    for j, mask in enumerate(record.propositions):
        if not (0 <= mask.sentence_idx < len(record.sentences)):
            violations.append(f"propositions[{j}]: sentence index {mask.sentence_idx} out of range")
            continue
        span = record.sentences[mask.sentence_idx]
        for t in mask.token_indices:
            if t >= n:
                violations.append(f"propositions[{j}]: token index {t} out of range for {n} tokens")
            elif not (span.start <= t < span.end):
                violations.append(f"propositions[{j}]: token index {t} outside sentence span [{span.start}, {span.end})")

    return violations


def span_slice(matrix: EmbeddingMatrix, span: SentenceSpan | PropositionMask) -> EmbeddingMatrix:
    """Rows of `matrix` selected by a sentence span or proposition mask.

    Only value equality is guaranteed, not sharing with the source matrix.
    Raises DataError for spans that do not fit the matrix.
    """
    if isinstance(span, SentenceSpan):
        if span.end > matrix.rows:
            raise DataError(f"invalid span [{span.start}, {span.end}) for matrix with {matrix.rows} rows")
        return EmbeddingMatrix(matrix.data[span.start : span.end])
    if isinstance(span, PropositionMask):
        if span.token_indices[-1] >= matrix.rows:
            raise DataError(
                f"invalid span: mask token index {span.token_indices[-1]} for matrix with {matrix.rows} rows"
            )
        return EmbeddingMatrix(matrix.data[list(span.token_indices)])
    raise TypeError(f"unsupported span type {type(span).__name__}")
