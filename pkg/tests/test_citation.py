"""Citation pipeline: proposition-as-query scoring, margins, variants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factories import unit_rows
from granurank import (
    DataError,
    EmbeddingMatrix,
    Marker,
    PassageRecord,
    QueryEncoding,
    RankingConfig,
    SentenceSpan,
    write_index,
)
from granurank.citation import (
    AnswerSentence,
    CitationResult,
    CitationVariant,
    GeneratedAnswer,
    PropositionCitation,
    SentenceCitations,
    cite_answer,
    cite_proposition,
    cite_sentence,
    cite_variant,
    citation_record,
    context_scores,
    load_generated_answers,
    render_cited_text,
    save_citations,
    sentence_encoding_id,
)


def make_context(cid, rows):
    rows = np.asarray(rows, dtype=np.float64)
    return PassageRecord(
        id=cid,
        embeddings=EmbeddingMatrix(rows),
        sentences=(SentenceSpan(0, rows.shape[0]),),
    )


def row_matrix(*rows):
    return EmbeddingMatrix(np.asarray(rows, dtype=np.float64))


# five identical query rows make per-context scores easy to read off:
# a context whose best row has dot p scores exactly 5 p
PROP_FIVE = row_matrix(*[[1.0, 0.0]] * 5)
R_06 = math.sqrt(1.0 - 0.7**2)
R_09 = math.sqrt(1.0 - 0.9**2)


class TestCiteProposition:
    def test_wide_margin_cites_top(self):
        contexts = [make_context("c0", [[1.0, 0.0]]), make_context("c1", [[0.7, R_06]])]
        got = cite_proposition(PROP_FIVE, contexts, margin=1.0)
        # scores [5.0, 3.5]: margin 1.5 clears the 1.0 threshold
        assert got.chosen == 0
        assert got.top_score == pytest.approx(5.0, abs=1e-9)
        assert got.runner_up_score == pytest.approx(3.5, abs=1e-9)

    def test_narrow_margin_withholds(self):
        contexts = [make_context("c0", [[1.0, 0.0]]), make_context("c1", [[0.9, R_09]])]
        got = cite_proposition(PROP_FIVE, contexts, margin=1.0)
        # scores [5.0, 4.5]: margin 0.5 < 1.0
        assert got.chosen is None
        assert got.top_index == 0
        assert got.runner_up_score == pytest.approx(4.5, abs=1e-9)

    def test_zero_margin_always_cites_argmax(self):
        contexts = [make_context("c0", [[0.9, R_09]]), make_context("c1", [[1.0, 0.0]])]
        got = cite_proposition(PROP_FIVE, contexts, margin=0.0)
        assert got.chosen == 1

    def test_single_context_always_cited(self):
        contexts = [make_context("only", [[0.0, 1.0]])]
        got = cite_proposition(PROP_FIVE, contexts, margin=1.0)
        assert got.chosen == 0
        assert got.runner_up_score is None

    def test_exact_tie_blocked_by_any_positive_margin(self):
        contexts = [make_context("c0", [[1.0, 0.0]]), make_context("c1", [[1.0, 0.0]])]
        assert cite_proposition(PROP_FIVE, contexts, margin=0.5).chosen is None
        assert cite_proposition(PROP_FIVE, contexts, margin=0.0).chosen == 0

    def test_empty_contexts_rejected(self):
        with pytest.raises(DataError, match="no contexts"):
            cite_proposition(PROP_FIVE, [], margin=0.0)

    def test_negative_margin_rejected(self):
        with pytest.raises(DataError, match="margin"):
            cite_proposition(PROP_FIVE, [make_context("c", [[1.0, 0.0]])], margin=-0.1)


def two_prop_sentence():
    """Proposition 0 points at [1,0], proposition 1 at [0,1]."""
    return AnswerSentence(
        text="alpha and beta.",
        encoding=row_matrix([1.0, 0.0], [0.0, 1.0]),
        propositions=((0,), (1,)),
    )


CONTEXT_X = make_context("cx", [[1.0, 0.0]])
CONTEXT_Y = make_context("cy", [[0.0, 1.0]])


class TestCiteSentence:
    def test_union_of_choices(self):
        got = cite_sentence(two_prop_sentence(), [CONTEXT_X, CONTEXT_Y], RankingConfig(citation_margin=0.5))
        assert got.cited == (0, 1)
        assert [p.chosen for p in got.per_proposition] == [0, 1]

    def test_dedup(self):
        s = AnswerSentence(
            text="both point one way",
            encoding=row_matrix([1.0, 0.0], [0.8, 0.6]),
            propositions=((0,), (1,)),
        )
        got = cite_sentence(s, [CONTEXT_X, CONTEXT_Y], RankingConfig(citation_margin=0.0))
        assert got.cited == (0,)

    def test_all_thresholded_out(self):
        s = AnswerSentence(
            text="too close",
            encoding=row_matrix([math.sqrt(0.5), math.sqrt(0.5)]),
            propositions=((0,),),
        )
        got = cite_sentence(s, [CONTEXT_X, CONTEXT_Y], RankingConfig(citation_margin=1.0))
        assert got.cited == ()
        assert got.per_proposition[0].chosen is None

    def test_no_propositions_no_citations(self):
        s = AnswerSentence(text="bare", encoding=row_matrix([1.0, 0.0]), propositions=())
        got = cite_sentence(s, [CONTEXT_X], RankingConfig())
        assert got.cited == ()
        assert got.no_propositions

    def test_matches_sentence_top1_for_whole_sentence_proposition(self):
        s = AnswerSentence(
            text="one span",
            encoding=row_matrix([1.0, 0.0], [0.6, 0.8]),
            propositions=((0, 1),),
        )
        cfg = RankingConfig(citation_margin=0.0)
        default = cite_sentence(s, [CONTEXT_X, CONTEXT_Y], cfg)
        top1 = cite_variant(s, [CONTEXT_X, CONTEXT_Y], CitationVariant.SENTENCE_TOP1, cfg)
        assert default.cited == top1.cited


class TestVariants:
    def _contexts(self):
        return [
            make_context("c0", [[1.0, 0.0]]),
            make_context("c1", [[0.8, 0.6]]),
            make_context("c2", [[0.0, 1.0]]),
        ]

    def test_sentence_top1(self):
        s = AnswerSentence(text="t", encoding=row_matrix([1.0, 0.0]), propositions=())
        got = cite_variant(s, self._contexts(), CitationVariant.SENTENCE_TOP1, RankingConfig())
        assert got.cited == (0,)
        assert got.per_proposition[0].top_score == pytest.approx(1.0, abs=1e-9)

    def test_sentence_top2(self):
        s = AnswerSentence(text="t", encoding=row_matrix([1.0, 0.0]), propositions=())
        got = cite_variant(s, self._contexts(), CitationVariant.SENTENCE_TOP2, RankingConfig())
        assert got.cited == (0, 1)

    def test_sentence_top2_with_single_context(self):
        s = AnswerSentence(text="t", encoding=row_matrix([1.0, 0.0]), propositions=())
        got = cite_variant(s, [CONTEXT_X], CitationVariant.SENTENCE_TOP2, RankingConfig())
        assert got.cited == (0,)

    def test_contextual_vs_isolated_attribution(self):
        # the sentence-level encoding of the ambiguous proposition leans on
        # its context and points at context 0; the same proposition encoded
        # in isolation points at context 1
        s = AnswerSentence(
            text="it was founded there.",
            encoding=row_matrix([1.0, 0.0]),
            propositions=((0,),),
        )
        isolated = [row_matrix([0.0, 1.0])]
        contexts = [CONTEXT_X, CONTEXT_Y]
        cfg = RankingConfig(citation_margin=0.0)
        contextual = cite_variant(s, contexts, CitationVariant.PROPOSITIONS, cfg)
        iso = cite_variant(s, contexts, CitationVariant.PROP_ISOLATED, cfg, isolated_encodings=isolated)
        assert contextual.cited == (0,)
        assert iso.cited == (1,)

    def test_isolated_requires_encodings(self):
        s = two_prop_sentence()
        with pytest.raises(DataError, match="isolated"):
            cite_variant(s, [CONTEXT_X], CitationVariant.PROP_ISOLATED, RankingConfig())
        with pytest.raises(DataError, match="isolated encodings mismatch"):
            cite_variant(
                s, [CONTEXT_X], CitationVariant.PROP_ISOLATED, RankingConfig(),
                isolated_encodings=[row_matrix([1.0, 0.0])],
            )


class TestThresholdMonotonicity:
    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_raising_margin_never_adds_citations(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        contexts = [
            make_context(f"c{i}", unit_rows(rng, int(rng.integers(1, 6)), d))
            for i in range(int(rng.integers(1, 5)))
        ]
        n_props = int(rng.integers(1, 4))
        tokens_per = int(rng.integers(1, 3))
        enc = unit_rows(rng, n_props * tokens_per, d)
        props = tuple(
            tuple(range(i * tokens_per, (i + 1) * tokens_per)) for i in range(n_props)
        )
        s = AnswerSentence(text="t", encoding=EmbeddingMatrix(enc), propositions=props)
        margins = sorted(float(m) for m in rng.uniform(0.0, 2.0, size=3))
        cited = [
            set(cite_sentence(s, contexts, RankingConfig(citation_margin=m)).cited)
            for m in margins
        ]
        assert cited[2] <= cited[1] <= cited[0]

    def test_determinism(self):
        s = two_prop_sentence()
        cfg = RankingConfig(citation_margin=0.3)
        a = cite_sentence(s, [CONTEXT_X, CONTEXT_Y], cfg)
        b = cite_sentence(s, [CONTEXT_X, CONTEXT_Y], cfg)
        assert a == b


class TestAnswerStructures:
    def test_proposition_validation(self):
        enc = row_matrix([1.0, 0.0], [0.0, 1.0])
        with pytest.raises(DataError, match="proposition 0: empty token set"):
            AnswerSentence("t", enc, ((),))
        with pytest.raises(DataError, match="strictly increasing"):
            AnswerSentence("t", enc, ((1, 0),))
        with pytest.raises(DataError, match="token index 2 out of range for 2 tokens"):
            AnswerSentence("t", enc, ((0, 2),))

    def test_proposition_rows_selects_masked_tokens(self):
        s = two_prop_sentence()
        np.testing.assert_array_equal(s.proposition_rows(1).data, [[0.0, 1.0]])
        with pytest.raises(DataError, match="invalid proposition index 5"):
            s.proposition_rows(5)

    def test_answer_needs_sentences(self):
        with pytest.raises(DataError, match="no sentences"):
            GeneratedAnswer("q", ())

    def test_cite_answer_isolated_alignment(self):
        answer = GeneratedAnswer("q", (two_prop_sentence(),))
        with pytest.raises(DataError, match="align"):
            cite_answer(answer, [CONTEXT_X], CitationVariant.PROP_ISOLATED, RankingConfig())


class TestRendering:
    def test_marks_go_before_trailing_punctuation(self):
        assert render_cited_text("The sky is blue.", [0, 2]) == "The sky is blue [1][3]."

    def test_no_citations_unchanged(self):
        assert render_cited_text("The sky is blue.", []) == "The sky is blue."

    def test_no_trailing_punctuation(self):
        assert render_cited_text("no period", [1]) == "no period [2]"

    def test_question_mark(self):
        assert render_cited_text("Is it blue?", [0]) == "Is it blue [1]?"


class TestIO:
    def _write_inputs(self, tmp_path):
        enc0 = row_matrix([1.0, 0.0], [0.0, 1.0])
        enc1 = row_matrix([0.6, 0.8])
        queries = [
            QueryEncoding(sentence_encoding_id("q1", 0), Marker.SENTENCE, enc0),
            QueryEncoding(sentence_encoding_id("q1", 1), Marker.SENTENCE, enc1),
        ]
        enc_path = tmp_path / "answers.agrv"
        write_index(queries, enc_path)
        answers_path = tmp_path / "answers.jsonl"
        answers_path.write_text(
            '{"query_id":"q1","sentences":['
            '{"text":"alpha beta.","propositions":[[0],[1]]},'
            '{"text":"gamma.","propositions":[[0]]}]}\n',
            encoding="utf-8",
        )
        return answers_path, enc_path

    def test_load_joins_encodings(self, tmp_path):
        answers_path, enc_path = self._write_inputs(tmp_path)
        answers = load_generated_answers(answers_path, enc_path)
        assert len(answers) == 1
        assert answers[0].query_id == "q1"
        assert answers[0].sentences[0].propositions == ((0,), (1,))
        assert answers[0].sentences[1].encoding.rows == 1

    def test_missing_encoding(self, tmp_path):
        answers_path, enc_path = self._write_inputs(tmp_path)
        answers_path.write_text(
            '{"query_id":"q2","sentences":[{"text":"x.","propositions":[]}]}\n',
            encoding="utf-8",
        )
        with pytest.raises(DataError, match="missing encoding 'q2#0'"):
            load_generated_answers(answers_path, enc_path)

    def test_wrong_marker_rejected(self, tmp_path):
        answers_path, _ = self._write_inputs(tmp_path)
        bad_path = tmp_path / "bad.agrv"
        write_index(
            [QueryEncoding("q1#0", Marker.PASSAGE, row_matrix([1.0, 0.0]))], bad_path
        )
        with pytest.raises(DataError, match="marker mismatch"):
            load_generated_answers(answers_path, bad_path)

    def test_mixed_marker_index_accepted(self, tmp_path):
        """Passage-marker rows alongside the sentence-marker ones (the
        indexing command writes both variants) are ignored, not fatal."""
        answers_path, _ = self._write_inputs(tmp_path)
        mixed_path = tmp_path / "mixed.agrv"
        write_index(
            [
                QueryEncoding("q1#0", Marker.SENTENCE, row_matrix([1.0, 0.0], [0.0, 1.0])),
                QueryEncoding("q1#0", Marker.PASSAGE, row_matrix([0.8, 0.6])),
                QueryEncoding("q1#1", Marker.SENTENCE, row_matrix([0.6, 0.8])),
                QueryEncoding("q1#1", Marker.PASSAGE, row_matrix([0.0, 1.0])),
            ],
            mixed_path,
        )
        answers = load_generated_answers(answers_path, mixed_path)
        assert answers[0].sentences[0].encoding.rows == 2
        assert answers[0].sentences[1].encoding.rows == 1

    def test_bad_line(self, tmp_path):
        answers_path, enc_path = self._write_inputs(tmp_path)
        answers_path.write_text('{"query_id":"q1"}\n', encoding="utf-8")
        with pytest.raises(DataError, match="bad answers line 1"):
            load_generated_answers(answers_path, enc_path)

    def test_round_trip_citations(self, tmp_path):
        result = CitationResult(
            query_id="q1",
            sentences=(
                SentenceCitations(
                    text="alpha beta.",
                    cited=(0, 2),
                    per_proposition=(
                        PropositionCitation(chosen=0, top_index=0, top_score=1.5, runner_up_score=0.5),
                        PropositionCitation(chosen=2, top_index=2, top_score=2.0, runner_up_score=1.0),
                    ),
                ),
            ),
        )
        out = tmp_path / "cited.jsonl"
        save_citations([result], out)
        import json

        rec = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
        assert rec["query_id"] == "q1"
        assert rec["sentences"][0]["rendered"] == "alpha beta [1][3]."
        assert rec["sentences"][0]["cited"] == [0, 2]
        assert rec["sentences"][0]["propositions"][1]["chosen"] == 2
        assert rec["sentences"][0]["no_propositions"] is False


def test_context_scores_order_and_values():
    scores = context_scores(PROP_FIVE, [CONTEXT_Y, CONTEXT_X])
    assert scores[0] == pytest.approx(0.0, abs=1e-9)
    assert scores[1] == pytest.approx(5.0, abs=1e-9)
