"""Turn checkpoint hidden states into engine-readable index files.

The scoreable rows of every record are content tokens only: the prepended
marker text and tokenizer specials are excluded before spans are computed.
Query augmentation/padding (a common multi-vector convention) is deliberately
disabled for the same reason — span arithmetic downstream assumes each row
is a content token.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from granurank import (
    DataError,
    EmbeddingMatrix,
    Marker,
    PassageRecord,
    PropositionMask,
    QueryEncoding,
    SentenceSpan,
    validate_passage,
    write_index,
)

from .encoder import CheckpointEncoder, EncodedText
from .segment import align_proposition, sentence_char_ranges, sentence_index_for

logger = logging.getLogger("granurank_export")

ZERO_NORM_TOL = 1e-12


@dataclass
class ExportJob:
    """One export run: checkpoint, input JSONL, output prefix, markers."""

    model: str
    input_path: str
    out_prefix: str
    batch_size: int = 8
    passage_marker: str = "[D]"
    query_marker: str = "[Q]"
    query_sentence_marker: str = "[QS]"

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise DataError(f"batch size must be >= 1, got {self.batch_size}")
        for name in ("passage_marker", "query_marker", "query_sentence_marker"):
            if not getattr(self, name).strip():
                raise DataError(f"{name} must be non-empty")


@dataclass
class ExportReport:
    """What an export run produced; records are kept pre-quantization so
    callers can compute in-process reference scores."""

    written: int
    skipped: list[tuple[str, str]] = field(default_factory=list)
    records: list = field(default_factory=list)


def reference_maxsim(query_rows: np.ndarray, passage_rows: np.ndarray) -> float:
    """The exporter's own late-interaction score, written as plain loops so
    it shares no code with the engine it is checked against."""
    total = 0.0
    for q in query_rows.tolist():
        best = -math.inf
        for p in passage_rows.tolist():
            best = max(best, sum(a * b for a, b in zip(q, p)))
        total += best
    return total


def read_input_records(path: str, text_keys: tuple[str, ...]) -> list[tuple[str, str]]:
    """(id, text) pairs from a JSONL file; the first present key in
    ``text_keys`` supplies the text."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    out: list[tuple[str, str]] = []
    for lineno, line in enumerate(raw_lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad line {lineno} in {path}: {exc}")
        if not isinstance(obj, dict) or "id" not in obj:
            raise DataError(f"bad line {lineno} in {path}: expected an object with 'id'")
        text = next((obj[k] for k in text_keys if isinstance(obj.get(k), str)), None)
        if text is None:
            raise DataError(
                f"bad line {lineno} in {path}: expected one of {list(text_keys)} as a string"
            )
        out.append((str(obj["id"]), text))
    if not out:
        raise DataError(f"no records in {path}")
    return out


def _content_rows(encoded: EncodedText, prefix_len: int, rec_id: str):
    """Unit-normalized rows for content tokens, with offsets rebased onto
    the unprefixed text. Marker pieces and specials are dropped."""
    rows, offsets = [], []
    for row, (start, end), is_special in zip(encoded.rows, encoded.offsets, encoded.special):
        if is_special or start < prefix_len:
            continue
        rows.append(row)
        offsets.append((start - prefix_len, end - prefix_len))
    if not rows:
        raise DataError(f"'{rec_id}': no content tokens survived the marker prefix")
    matrix = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms < ZERO_NORM_TOL):
        raise DataError(f"'{rec_id}': zero-norm token row from the checkpoint")
    return matrix / norms[:, None], offsets


def _spans_from_offsets(
    offsets: list[tuple[int, int]], ranges: list[tuple[int, int]], rec_id: str
) -> tuple[SentenceSpan, ...]:
    indices = [sentence_index_for(ranges, start) for start, _ in offsets]
    if any(b < a for a, b in zip(indices, indices[1:])):
        raise DataError(f"'{rec_id}': token order disagrees with sentence order")
    spans: list[SentenceSpan] = []
    pos = 0
    for idx in range(len(offsets)):
        if idx + 1 == len(offsets) or indices[idx + 1] != indices[idx]:
            spans.append(SentenceSpan(pos, idx + 1))
            pos = idx + 1
    return tuple(spans)


def _masks_for(
    encoder: CheckpointEncoder,
    text: str,
    ranges: list[tuple[int, int]],
    offsets: list[tuple[int, int]],
    spans: tuple[SentenceSpan, ...],
    propositions: list[dict],
    rec_id: str,
) -> tuple[PropositionMask, ...]:
    """Align proposition strings to content tokens, in absolute positions.

    Proposition entries are {"sentence": span_index, "text": ...}. Tokens
    that cannot be matched are dropped with a warning; a proposition with
    nothing left is omitted."""
    masks: list[PropositionMask] = []
    for prop in propositions:
        sent_idx = int(prop["sentence"])
        if not (0 <= sent_idx < len(spans)):
            logger.warning("'%s': proposition names missing sentence %d; omitted", rec_id, sent_idx)
            continue
        span = spans[sent_idx]
        # token strings for this sentence, recovered from the raw text slice
        sent_tokens = []
        for start, end in offsets[span.start : span.end]:
            sent_tokens.append(text[start:end])
        prop_tokens, _ = encoder.token_strings(str(prop["text"]))
        # compare surface forms: strip wordpiece continuation markers
        cleaned = [t[2:] if t.startswith("##") else t for t in prop_tokens]
        matched, dropped = align_proposition(sent_tokens, cleaned)
        if dropped:
            logger.warning(
                "'%s': dropped unalignable proposition tokens %s", rec_id, dropped
            )
        if not matched:
            logger.warning("'%s': proposition %r aligned to nothing; omitted", rec_id, prop["text"])
            continue
        masks.append(
            PropositionMask(
                sentence_idx=sent_idx,
                token_indices=tuple(span.start + i for i in matched),
            )
        )
    return tuple(masks)


def export_passages(job: ExportJob, propositions: dict[str, list[dict]] | None = None) -> ExportReport:
    """Encode passages and write ``<out_prefix>.agrv`` plus the span sidecar.

    Records that cannot be aligned are skipped and logged, never written.
    ``propositions`` optionally maps passage id -> proposition entries to
    align into token masks."""
    encoder = CheckpointEncoder(job.model)
    inputs = read_input_records(job.input_path, ("text",))
    prefix = job.passage_marker + " "
    report = ExportReport(written=0)

    for batch_start in range(0, len(inputs), job.batch_size):
        batch = inputs[batch_start : batch_start + job.batch_size]
        encoded = encoder.encode_batch([prefix + text for _, text in batch])
        for (rec_id, text), enc in zip(batch, encoded):
            try:
                if not text.strip():
                    raise DataError(f"'{rec_id}': empty text")
                rows, offsets = _content_rows(enc, len(prefix), rec_id)
                ranges = sentence_char_ranges(text)
                if not ranges:
                    raise DataError(f"'{rec_id}': no sentences found")
                spans = _spans_from_offsets(offsets, ranges, rec_id)
                masks = _masks_for(
                    encoder, text, ranges, offsets, spans,
                    (propositions or {}).get(rec_id, []), rec_id,
                )
                record = PassageRecord(
                    id=rec_id,
                    embeddings=EmbeddingMatrix(rows),
                    sentences=spans,
                    propositions=masks,
                    text=text,
                )
                violations = validate_passage(record)
                if violations:
                    raise DataError(f"'{rec_id}': {'; '.join(violations)}")
            except DataError as exc:
                logger.error("skipping passage %s: %s", rec_id, exc)
                report.skipped.append((rec_id, str(exc)))
                continue
            report.records.append(record)
            report.written += 1

    if not report.records:
        raise DataError(f"no exportable passages in {job.input_path}")
    write_index(report.records, f"{job.out_prefix}.agrv")
    return report


_MARKER_TEXT = {
    Marker.PASSAGE: "query_marker",
    Marker.SENTENCE: "query_sentence_marker",
}


def export_queries(job: ExportJob, markers: tuple[Marker, ...] = (Marker.PASSAGE, Marker.SENTENCE)) -> ExportReport:
    """Encode queries under each requested marker variant and write
    ``<out_prefix>.agrv``; one record per (query, marker)."""
    if not markers:
        raise DataError("no marker variants requested")
    encoder = CheckpointEncoder(job.model)
    inputs = read_input_records(job.input_path, ("question", "text"))
    report = ExportReport(written=0)

    for marker in markers:
        prefix = getattr(job, _MARKER_TEXT[marker]) + " "
        for batch_start in range(0, len(inputs), job.batch_size):
            batch = inputs[batch_start : batch_start + job.batch_size]
            encoded = encoder.encode_batch([prefix + text for _, text in batch])
            for (rec_id, text), enc in zip(batch, encoded):
                try:
                    if not text.strip():
                        raise DataError(f"'{rec_id}': empty text")
                    rows, _ = _content_rows(enc, len(prefix), rec_id)
                except DataError as exc:
                    logger.error("skipping query %s (%s): %s", rec_id, marker.value, exc)
                    report.skipped.append((rec_id, str(exc)))
                    continue
                report.records.append(QueryEncoding(rec_id, marker, EmbeddingMatrix(rows)))
                report.written += 1

    if not report.records:
        raise DataError(f"no exportable queries in {job.input_path}")
    write_index(report.records, f"{job.out_prefix}.agrv")
    return report
