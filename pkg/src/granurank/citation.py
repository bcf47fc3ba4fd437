"""Post-hoc citation of context passages for generated answers.

Each sentence of an answer carries proposition masks over its own
sentence-level encoding. A proposition's token rows act as a miniature
query against the K context passages the answer was generated from; the
top-scoring context becomes the citation, unless a margin threshold says
the decision is too close to call. A sentence cites the union of its
propositions' choices.

The ablation variants swap the query side: isolated per-proposition
encodings instead of rows sliced from the sentence encoding, or the whole
sentence as a single query citing the top one or two contexts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .core import DataError, EmbeddingMatrix, Marker, PassageRecord, RankingConfig
from .metrics import CitedSentence
from .scorer import maxsim_rows
from .storage import read_index


@dataclass(frozen=True)
class AnswerSentence:
    """One generated sentence: its text, its sentence-level encoding, and
    proposition masks as token-index tuples into that encoding."""

    text: str
    encoding: EmbeddingMatrix
    propositions: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        props = tuple(tuple(int(t) for t in p) for p in self.propositions)
        n = self.encoding.rows
        for j, prop in enumerate(props):
            if not prop:
                raise DataError(f"proposition {j}: empty token set")
            if any(b <= a for a, b in zip(prop, prop[1:])):
                raise DataError(f"proposition {j}: token indices must be strictly increasing")
            for t in prop:
                if not (0 <= t < n):
                    raise DataError(f"proposition {j}: token index {t} out of range for {n} tokens")
        object.__setattr__(self, "propositions", props)

    def proposition_rows(self, prop_idx: int) -> EmbeddingMatrix:
        if not (0 <= prop_idx < len(self.propositions)):
            raise DataError(f"invalid proposition index {prop_idx}")
        return EmbeddingMatrix(self.encoding.data[list(self.propositions[prop_idx])])


@dataclass(frozen=True)
class GeneratedAnswer:
    query_id: str
    sentences: tuple[AnswerSentence, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.sentences:
            raise DataError(f"answer '{self.query_id}' has no sentences")


@dataclass(frozen=True)
class PropositionCitation:
    """Audit record for one query-side scoring decision: which context won,
    by how much, and whether the margin let the citation through.
    runner_up_score is None when there was only one context."""

    chosen: int | None
    top_index: int
    top_score: float
    runner_up_score: float | None


@dataclass(frozen=True)
class SentenceCitations:
    """Cited context indices (0-based, deduplicated, sorted) plus the
    per-query audit trail. For the sentence-as-query variants the audit
    holds a single entry for the sentence itself."""

    text: str
    cited: tuple[int, ...]
    per_proposition: tuple[PropositionCitation, ...]

    @property
    def no_propositions(self) -> bool:
        return not self.per_proposition

    def to_cited_sentence(self) -> CitedSentence:
        return CitedSentence(text=self.text, cited=self.cited)


@dataclass(frozen=True)
class CitationResult:
    query_id: str
    sentences: tuple[SentenceCitations, ...]


class CitationVariant(Enum):
    PROPOSITIONS = "propositions"
    PROP_ISOLATED = "prop_isolated_encoding"
    SENTENCE_TOP1 = "sentence_top1"
    SENTENCE_TOP2 = "sentence_top2"


def context_scores(query_rows: EmbeddingMatrix, contexts: Sequence[PassageRecord]) -> list[float]:
    """MaxSim of the query rows against each context's full token matrix."""
    if not contexts:
        raise DataError("no contexts to cite")
    return [maxsim_rows(query_rows, p.embeddings) for p in contexts]


def cite_proposition(
    prop_rows: EmbeddingMatrix,
    contexts: Sequence[PassageRecord],
    margin: float,
) -> PropositionCitation:
    """Pick the top-scoring context, unless the margin threshold blocks it.

    The margin compares raw scores: with margin > 0, the top context is
    cited only when it beats the runner-up by at least the margin. A single
    context has no runner-up and is always cited.
    """
    if margin < 0:
        raise DataError(f"citation margin must be >= 0, got {margin}")
    scores = context_scores(prop_rows, contexts)
    top = min(range(len(scores)), key=lambda i: (-scores[i], i))
    if len(scores) == 1:
        return PropositionCitation(chosen=0, top_index=0, top_score=scores[0], runner_up_score=None)
    runner_up = max(s for i, s in enumerate(scores) if i != top)
    chosen: int | None = top
    if margin > 0 and (scores[top] - runner_up) < margin:
        chosen = None
    return PropositionCitation(
        chosen=chosen, top_index=top, top_score=scores[top], runner_up_score=runner_up
    )


def cite_sentence(
    sentence: AnswerSentence,
    contexts: Sequence[PassageRecord],
    cfg: RankingConfig,
) -> SentenceCitations:
    """Default pipeline: each proposition, sliced from the sentence-level
    encoding, cites independently; the sentence takes the union. A sentence
    with no propositions gets no citations (callers can audit via
    no_propositions)."""
    per = tuple(
        cite_proposition(sentence.proposition_rows(j), contexts, cfg.citation_margin)
        for j in range(len(sentence.propositions))
    )
    cited = tuple(sorted({p.chosen for p in per if p.chosen is not None}))
    return SentenceCitations(text=sentence.text, cited=cited, per_proposition=per)


def cite_variant(
    sentence: AnswerSentence,
    contexts: Sequence[PassageRecord],
    variant: CitationVariant,
    cfg: RankingConfig,
    isolated_encodings: Sequence[EmbeddingMatrix] | None = None,
) -> SentenceCitations:
    """Ablation entry point; PROPOSITIONS is the default pipeline.

    PROP_ISOLATED swaps in per-proposition encodings produced without the
    surrounding sentence. The sentence-as-query variants ignore the margin
    and cite the top one or two contexts outright.
    """
    if variant is CitationVariant.PROPOSITIONS:
        return cite_sentence(sentence, contexts, cfg)

    if variant is CitationVariant.PROP_ISOLATED:
        if isolated_encodings is None:
            raise DataError("prop_isolated_encoding variant needs isolated proposition encodings")
        if len(isolated_encodings) != len(sentence.propositions):
            raise DataError(
                f"isolated encodings mismatch: {len(isolated_encodings)} encodings "
                f"for {len(sentence.propositions)} propositions"
            )
        per = tuple(
            cite_proposition(rows, contexts, cfg.citation_margin) for rows in isolated_encodings
        )
        cited = tuple(sorted({p.chosen for p in per if p.chosen is not None}))
        return SentenceCitations(text=sentence.text, cited=cited, per_proposition=per)

    scores = context_scores(sentence.encoding, contexts)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    top = order[0]
    runner_up = scores[order[1]] if len(order) > 1 else None
    audit = PropositionCitation(
        chosen=top, top_index=top, top_score=scores[top], runner_up_score=runner_up
    )
    take = 1 if variant is CitationVariant.SENTENCE_TOP1 else 2
    cited = tuple(sorted(order[:take]))
    return SentenceCitations(text=sentence.text, cited=cited, per_proposition=(audit,))


def cite_answer(
    answer: GeneratedAnswer,
    contexts: Sequence[PassageRecord],
    variant: CitationVariant,
    cfg: RankingConfig,
    isolated_encodings: Sequence[Sequence[EmbeddingMatrix]] | None = None,
) -> CitationResult:
    """Cite every sentence of one answer; sentence order is preserved."""
    if variant is CitationVariant.PROP_ISOLATED:
        if isolated_encodings is None or len(isolated_encodings) != len(answer.sentences):
            raise DataError("isolated encodings must align with the answer's sentences")
        rows = tuple(
            cite_variant(s, contexts, variant, cfg, isolated_encodings=iso)
            for s, iso in zip(answer.sentences, isolated_encodings)
        )
    else:
        rows = tuple(cite_variant(s, contexts, variant, cfg) for s in answer.sentences)
    return CitationResult(query_id=answer.query_id, sentences=rows)


_TRAILING_PUNCT = re.compile(r"^(.*?)([.!?]*)\s*$", re.DOTALL)


def render_cited_text(text: str, cited: Sequence[int]) -> str:
    """Append 1-based citation marks, keeping trailing punctuation last:
    ("The sky is blue.", [0, 2]) renders as "The sky is blue [1][3].". A
    sentence with no citations is returned unchanged."""
    if not cited:
        return text
    marks = "".join(f"[{c + 1}]" for c in cited)
    body, punct = _TRAILING_PUNCT.match(text).groups()
    return f"{body.rstrip()} {marks}{punct}"


def sentence_encoding_id(query_id: str, sentence_idx: int) -> str:
    """Record id convention tying an answer sentence to its encoding."""
    return f"{query_id}#{sentence_idx}"


def load_generated_answers(
    answers_path: str | Path, encodings_path: str | Path
) -> list[GeneratedAnswer]:
    """Join the answers JSONL with the sentence encodings index.

    Each sentence's encoding is looked up by the "{query_id}#{index}" id
    and must carry the sentence marker (propositions slice a sentence-level
    encoding). Records under other markers are ignored, so a mixed-marker
    index — what the indexing command writes — works directly; an id found
    only under another marker is still reported as a marker mismatch."""
    queries, _ = read_index(encodings_path)
    by_id: dict[str, EmbeddingMatrix] = {}
    wrong_marker: set[str] = set()
    for q in queries:
        if q.marker is Marker.SENTENCE:
            by_id[q.id] = q.embeddings
        else:
            wrong_marker.add(q.id)

    answers = []
    lines = Path(answers_path).read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            query_id = obj["query_id"]
            raw_sentences = obj["sentences"]
            sentences = []
            for j, s in enumerate(raw_sentences):
                key = sentence_encoding_id(query_id, j)
                if key not in by_id:
                    if key in wrong_marker:
                        raise DataError(
                            f"marker mismatch: sentence encoding '{key}' must use the sentence marker"
                        )
                    raise DataError(f"missing encoding '{key}'")
                sentences.append(
                    AnswerSentence(
                        text=s["text"],
                        encoding=by_id[key],
                        propositions=tuple(tuple(p) for p in s["propositions"]),
                    )
                )
            answers.append(GeneratedAnswer(query_id=query_id, sentences=tuple(sentences)))
        except DataError:
            raise
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise DataError(f"bad answers line {lineno}: {exc}") from exc
    if not answers:
        raise DataError(f"no answers in {answers_path}")
    return answers


def citation_record(result: CitationResult) -> dict:
    """JSON-ready record: rendered text plus the full audit trail."""
    return {
        "query_id": result.query_id,
        "sentences": [
            {
                "text": s.text,
                "rendered": render_cited_text(s.text, s.cited),
                "cited": list(s.cited),
                "no_propositions": s.no_propositions,
                "propositions": [
                    {
                        "chosen": p.chosen,
                        "top_index": p.top_index,
                        "top_score": p.top_score,
                        "runner_up_score": p.runner_up_score,
                    }
                    for p in s.per_proposition
                ],
            }
            for s in result.sentences
        ],
    }


def save_citations(results: Sequence[CitationResult], path: str | Path) -> None:
    lines = [json.dumps(citation_record(r), separators=(",", ":"), ensure_ascii=False) for r in results]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
