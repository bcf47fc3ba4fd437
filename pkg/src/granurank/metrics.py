"""Answer-match ranking metrics and entailment-based citation metrics.

Answer matching is deliberately simple and pinned precisely so golden
numbers stay stable: case-folded, whitespace-normalized substring
containment. Citation quality is measured against a pluggable entailment
oracle; a substring stub ships for desk-scale tests, and a real judge can
drop in through the same interface.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .core import DataError


def normalize_text(text: str) -> str:
    """Case-fold and collapse all whitespace runs to single spaces."""
    return " ".join(text.casefold().split())


@dataclass(frozen=True)
class QrelByAnswer:
    """Acceptable answer strings for one query."""

    query_id: str
    answers: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "answers", tuple(self.answers))
        if not self.answers:
            raise DataError(f"qrel for '{self.query_id}' has no answers")


def parse_qrels(lines: Sequence[str]) -> dict[str, QrelByAnswer]:
    """Parse tab-separated qrels: query_id <TAB> answer1|answer2|..."""
    out: dict[str, QrelByAnswer] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise DataError(f"bad qrels line {lineno}: expected 2 tab-separated fields")
        qid, answers = parts
        if qid in out:
            raise DataError(f"duplicate qrels entry '{qid}'")
        out[qid] = QrelByAnswer(qid, tuple(a for a in answers.split("|") if a))
    return out


def hit(unit_text: str, answers: Sequence[str]) -> bool:
    """True iff any answer occurs in the unit text after normalization."""
    haystack = normalize_text(unit_text)
    return any(normalize_text(a) in haystack for a in answers)


def _check_rankings(
    ranked_texts: Mapping[str, Sequence[str]], qrels: Mapping[str, QrelByAnswer]
) -> None:
    if not ranked_texts:
        raise DataError("no queries to evaluate")
    for qid, units in ranked_texts.items():
        if not units:
            raise DataError(f"empty ranking for query '{qid}'")
        if qid not in qrels:
            raise DataError(f"no qrels entry for query '{qid}'")


def precision_at_1(
    ranked_texts: Mapping[str, Sequence[str]], qrels: Mapping[str, QrelByAnswer]
) -> float:
    """Fraction of queries whose top-ranked unit contains an answer."""
    _check_rankings(ranked_texts, qrels)
    hits = sum(1 for qid, units in ranked_texts.items() if hit(units[0], qrels[qid].answers))
    return hits / len(ranked_texts)


def recall_at_5(
    ranked_texts: Mapping[str, Sequence[str]], qrels: Mapping[str, QrelByAnswer]
) -> float:
    """Fraction of queries with an answer-bearing unit in the top 5."""
    _check_rankings(ranked_texts, qrels)
    hits = 0
    for qid, units in ranked_texts.items():
        if any(hit(u, qrels[qid].answers) for u in units[:5]):
            hits += 1
    return hits / len(ranked_texts)


class EntailmentOracle(Protocol):
    """Judge whether the premises, taken together, entail the claim.

    Implementations must be deterministic for fixed inputs. An empty
    premise list entails nothing.
    """

    def judge(self, premise_texts: Sequence[str], claim_text: str) -> bool: ...


class SubstringOracle:
    """Desk-scale stand-in: entailed iff the normalized claim appears in
    the normalized concatenation of the premises."""

    def judge(self, premise_texts: Sequence[str], claim_text: str) -> bool:
        if not premise_texts:
            return False
        return normalize_text(claim_text) in normalize_text(" ".join(premise_texts))


@dataclass(frozen=True)
class CitedSentence:
    """One answer sentence with its cited context indices (0-based)."""

    text: str
    cited: tuple[int, ...]


@dataclass(frozen=True)
class CitationReport:
    precision: float
    recall: float
    precision_defined: bool  # False when there were no citations at all


def citation_is_irrelevant(
    citation: int,
    sentence: CitedSentence,
    context_texts: Sequence[str],
    oracle: EntailmentOracle,
) -> bool:
    """The pinned irrelevance rule, kept in one place so an alternative
    rule is a one-function swap: a citation is irrelevant iff the remaining
    citations still entail the sentence and the citation alone does not.
    """
    rest = [context_texts[c] for c in sentence.cited if c != citation]
    if not oracle.judge(rest, sentence.text):
        return False
    return not oracle.judge([context_texts[citation]], sentence.text)


def citation_scores(
    sentences: Sequence[CitedSentence],
    context_texts: Sequence[str],
    oracle: EntailmentOracle,
) -> CitationReport:
    """Recall: sentences entailed by their cited passages together.
    Precision: citations that are not irrelevant under the pinned rule."""
    if not sentences:
        raise DataError("no sentences to evaluate")
    for s in sentences:
        for c in s.cited:
            if not (0 <= c < len(context_texts)):
                raise DataError(f"cited context index {c} out of range for {len(context_texts)} contexts")

    entailed = 0
    for s in sentences:
        premises = [context_texts[c] for c in s.cited]
        if oracle.judge(premises, s.text):
            entailed += 1
    recall = entailed / len(sentences)

    total_citations = 0
    relevant = 0
    for s in sentences:
        for c in s.cited:
            total_citations += 1
            if not citation_is_irrelevant(c, s, context_texts, oracle):
                relevant += 1
    if total_citations == 0:
        return CitationReport(precision=0.0, recall=recall, precision_defined=False)
    return CitationReport(
        precision=relevant / total_citations, recall=recall, precision_defined=True
    )
