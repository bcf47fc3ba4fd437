"""Export pipeline against the tiny on-disk checkpoint."""

import logging
import time

import numpy as np
import pytest

from granurank import Marker, maxsim_rows, read_index, validate_passage
from granurank import DataError
from granurank_export import (
    ExportJob,
    export_passages,
    export_queries,
    reference_maxsim,
)

WORD_POOL = [
    "the", "sky", "is", "blue", "grass", "green", "paris", "capital", "of",
    "france", "rivers", "flow", "north", "cats", "sleep", "all", "day", "long",
    "sun", "sets", "west", "birds", "sing", "trees", "grow", "tall", "rain",
    "falls", "often", "wind", "blows", "cold", "stars", "shine", "bright",
    "fish", "swim", "deep", "snow", "covers", "hills", "moon", "rises", "late",
]


def synth_text(rng: np.random.Generator, n_sentences: int) -> str:
    sentences = []
    for _ in range(n_sentences):
        words = rng.choice(WORD_POOL, size=int(rng.integers(3, 7)), replace=False)
        sentences.append(" ".join(words.tolist()) + ".")
    return " ".join(sentences)


def job_for(checkpoint, input_path, out_prefix, **kwargs) -> ExportJob:
    return ExportJob(model=checkpoint, input_path=input_path, out_prefix=out_prefix, **kwargs)


class TestExportPassages:
    def test_single_sentence_full_span(self, checkpoint, write_jsonl, tmp_path):
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": "the sky is blue"}])
        report = export_passages(job_for(checkpoint, path, str(tmp_path / "out")))
        assert report.written == 1 and not report.skipped
        records, manifest = read_index(tmp_path / "out.agrv")
        assert manifest.record_count == 1
        record = records[0]
        assert len(record.sentences) == 1
        span = record.sentences[0]
        assert (span.start, span.end) == (0, record.embeddings.rows)
        assert validate_passage(record) == []

    def test_two_sentences_two_spans(self, checkpoint, write_jsonl, tmp_path):
        text = "the sky is blue. grass is green."
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": text}])
        export_passages(job_for(checkpoint, path, str(tmp_path / "out")))
        records, _ = read_index(tmp_path / "out.agrv")
        record = records[0]
        assert len(record.sentences) == 2
        # "the sky is blue ." and "grass is green ." are 5 + 4 content tokens
        assert (record.sentences[0].start, record.sentences[0].end) == (0, 5)
        assert (record.sentences[1].start, record.sentences[1].end) == (5, 9)
        assert record.embeddings.rows == 9

    def test_rows_unit_normalized(self, checkpoint, write_jsonl, tmp_path):
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": "rivers flow north. cats sleep."}])
        export_passages(job_for(checkpoint, path, str(tmp_path / "out")))
        records, _ = read_index(tmp_path / "out.agrv")
        norms = np.linalg.norm(records[0].embeddings.data, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-6)

    def test_empty_text_skipped_and_logged(self, checkpoint, write_jsonl, tmp_path, caplog):
        path = write_jsonl("p.jsonl", [
            {"id": "keep", "text": "the sun sets west."},
            {"id": "drop", "text": "   "},
        ])
        with caplog.at_level(logging.ERROR, logger="granurank_export"):
            report = export_passages(job_for(checkpoint, path, str(tmp_path / "out")))
        assert report.written == 1
        assert report.skipped == [("drop", "'drop': empty text")]
        assert "skipping passage drop" in caplog.text
        records, _ = read_index(tmp_path / "out.agrv")
        assert [r.id for r in records] == ["keep"]

    def test_marker_tokens_not_exported(self, checkpoint, write_jsonl, tmp_path):
        """Same text under two different passage markers: identical row
        counts (content only), different values (context changed)."""
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": "the moon rises late."}])
        export_passages(job_for(checkpoint, path, str(tmp_path / "a"), passage_marker="[D]"))
        export_passages(job_for(checkpoint, path, str(tmp_path / "b"), passage_marker="stars shine"))
        (rec_a,), _ = read_index(tmp_path / "a.agrv")
        (rec_b,), _ = read_index(tmp_path / "b.agrv")
        assert rec_a.embeddings.rows == rec_b.embeddings.rows == 5
        assert not np.allclose(rec_a.embeddings.data, rec_b.embeddings.data)

    def test_deterministic_bytes(self, checkpoint, write_jsonl, tmp_path):
        rng = np.random.default_rng(5)
        path = write_jsonl("p.jsonl", [
            {"id": f"p{i}", "text": synth_text(rng, 2)} for i in range(6)
        ])
        export_passages(job_for(checkpoint, path, str(tmp_path / "a"), batch_size=2))
        export_passages(job_for(checkpoint, path, str(tmp_path / "b"), batch_size=2))
        assert (tmp_path / "a.agrv").read_bytes() == (tmp_path / "b.agrv").read_bytes()
        assert (tmp_path / "a.spans.jsonl").read_bytes() == (tmp_path / "b.spans.jsonl").read_bytes()

    def test_propositions_become_masks(self, checkpoint, write_jsonl, tmp_path, caplog):
        text = "the cats sleep all day. rain falls often."
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": text}])
        props = {"p1": [
            {"sentence": 0, "text": "cats sleep"},
            {"sentence": 1, "text": "rain blows often"},  # 'blows' not in the sentence
        ]}
        with caplog.at_level(logging.WARNING, logger="granurank_export"):
            export_passages(job_for(checkpoint, path, str(tmp_path / "out")), propositions=props)
        records, _ = read_index(tmp_path / "out.agrv")
        record = records[0]
        assert len(record.propositions) == 2
        # sentence 0 content tokens: the cats sleep all day .
        assert record.propositions[0].sentence_idx == 0
        assert record.propositions[0].token_indices == (1, 2)
        # sentence 1 content tokens start at row 6: rain falls often .
        assert record.propositions[1].sentence_idx == 1
        assert record.propositions[1].token_indices == (6, 8)
        assert "dropped unalignable proposition tokens" in caplog.text
        assert "blows" in caplog.text

    def test_unalignable_proposition_omitted(self, checkpoint, write_jsonl, tmp_path, caplog):
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": "bees make honey."}])
        props = {"p1": [{"sentence": 0, "text": "wasps sting people"}]}
        with caplog.at_level(logging.WARNING, logger="granurank_export"):
            export_passages(job_for(checkpoint, path, str(tmp_path / "out")), propositions=props)
        records, _ = read_index(tmp_path / "out.agrv")
        assert records[0].propositions == ()
        assert "aligned to nothing" in caplog.text

    def test_all_records_bad_raises(self, checkpoint, write_jsonl, tmp_path):
        path = write_jsonl("p.jsonl", [{"id": "only", "text": "  "}])
        with pytest.raises(DataError, match="no exportable passages"):
            export_passages(job_for(checkpoint, path, str(tmp_path / "out")))

    def test_bad_checkpoint(self, write_jsonl, tmp_path):
        path = write_jsonl("p.jsonl", [{"id": "p1", "text": "hello."}])
        with pytest.raises(DataError, match="cannot load checkpoint"):
            export_passages(job_for(str(tmp_path / "nonexistent"), path, str(tmp_path / "out")))


class TestExportQueries:
    def test_both_markers_two_records_each(self, checkpoint, write_jsonl, tmp_path):
        path = write_jsonl("q.jsonl", [
            {"id": "q1", "question": "the capital of france"},
            {"id": "q2", "question": "stars shine bright"},
        ])
        report = export_queries(job_for(checkpoint, path, str(tmp_path / "out")))
        assert report.written == 4
        records, manifest = read_index(tmp_path / "out.agrv")
        assert manifest.record_count == 4
        by_id = {}
        for rec in records:
            by_id.setdefault(rec.id, set()).add(rec.marker)
        assert by_id == {"q1": {Marker.PASSAGE, Marker.SENTENCE},
                         "q2": {Marker.PASSAGE, Marker.SENTENCE}}

    def test_marker_variants_differ(self, checkpoint, write_jsonl, tmp_path):
        """Markers the tokenizer can actually distinguish must condition the
        encoding. (The bracketed defaults all collapse to unknown-token ids
        under this tiny vocab, which would make the variants identical.)"""
        path = write_jsonl("q.jsonl", [{"id": "q1", "question": "fish swim deep"}])
        export_queries(job_for(checkpoint, path, str(tmp_path / "out"),
                               query_marker="north", query_sentence_marker="west"))
        records, _ = read_index(tmp_path / "out.agrv")
        variants = {rec.marker: rec.embeddings.data for rec in records}
        assert not np.allclose(variants[Marker.PASSAGE], variants[Marker.SENTENCE])

    def test_single_marker_selectable(self, checkpoint, write_jsonl, tmp_path):
        path = write_jsonl("q.jsonl", [{"id": "q1", "text": "snow covers hills"}])
        export_queries(job_for(checkpoint, path, str(tmp_path / "out")), markers=(Marker.SENTENCE,))
        records, _ = read_index(tmp_path / "out.agrv")
        assert [rec.marker for rec in records] == [Marker.SENTENCE]


class TestConformance:
    def test_engine_score_matches_reference_on_100_passages(self, checkpoint, write_jsonl, tmp_path):
        """Exported files validate cleanly and the engine reproduces the
        exporter's own score within 1e-4 on 100 passages x 5 queries."""
        rng = np.random.default_rng(1234)
        p_path = write_jsonl("p.jsonl", [
            {"id": f"p{i:03d}", "text": synth_text(rng, int(rng.integers(1, 4)))}
            for i in range(100)
        ])
        q_path = write_jsonl("q.jsonl", [
            {"id": f"q{i}", "question": synth_text(rng, 1)[:-1]} for i in range(5)
        ])
        start = time.perf_counter()
        p_report = export_passages(job_for(checkpoint, p_path, str(tmp_path / "p"), batch_size=16))
        q_report = export_queries(job_for(checkpoint, q_path, str(tmp_path / "q")),
                                  markers=(Marker.PASSAGE,))
        assert p_report.written == 100 and not p_report.skipped

        passages, _ = read_index(tmp_path / "p.agrv")
        queries, _ = read_index(tmp_path / "q.agrv")
        for record in passages:
            assert validate_passage(record) == []

        # reference on pre-write float64 rows; engine on the read-back index
        pre_write = {rec.id: rec.embeddings.data for rec in p_report.records}
        q_pre = {rec.id: rec.embeddings.data for rec in q_report.records}
        checked = 0
        for query in queries:
            for record in passages:
                ref = reference_maxsim(q_pre[query.id], pre_write[record.id])
                got = maxsim_rows(query.embeddings, record.embeddings)
                assert abs(got - ref) <= 1e-4, f"{query.id}/{record.id}: {got} vs {ref}"
                checked += 1
        assert checked == 500
        elapsed = time.perf_counter() - start
        assert elapsed < 120.0, f"conformance sweep took {elapsed:.1f}s"
