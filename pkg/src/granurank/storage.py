"""Bit-exact binary index format for token embeddings, plus span sidecar.

Layout of a ``.agrv`` file (all integers little-endian):

    magic    4 bytes   b"AGRV"
    version  u32       currently 1
    dim      u32
    count    u32       number of records
    kind     u8        0 = passages, 1 = queries
    per record:
        id_len  u16, then id as UTF-8 bytes
        marker  u8         query files only (0 = passage marker, 1 = sentence marker)
        tokens  u32
        rows    tokens * dim IEEE-754 binary32, row-major

Passage files carry a ``<name>.spans.jsonl`` sidecar, one JSON object per
line in record order with keys in fixed order:

    {"id": ..., "sentences": [[start, end], ...],
     "propositions": [{"sentence": i, "tokens": [...]}, ...]}

Files are byte-identical across runs for identical input: records are
serialized in input order and carry no timestamps. Query files have no
sidecar. Within a query file the uniqueness key is (id, marker), so both
marker variants of one query can live side by side; passage ids are unique
outright.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    DataError,
    EmbeddingMatrix,
    Marker,
    PassageRecord,
    PropositionMask,
    QueryEncoding,
    SentenceSpan,
    validate_passage,
)

MAGIC = b"AGRV"
VERSION = 1

_MARKER_TO_BYTE = {Marker.PASSAGE: 0, Marker.SENTENCE: 1}
_BYTE_TO_MARKER = {v: k for k, v in _MARKER_TO_BYTE.items()}


class IndexKind(Enum):
    PASSAGES = 0
    QUERIES = 1


@dataclass(frozen=True)
class IndexManifest:
    version: int
    dim: int
    record_count: int
    kind: IndexKind


def sidecar_path(path: str | Path) -> Path:
    """Span sidecar path belonging to a ``.agrv`` file."""
    p = Path(path)
    if p.name.endswith(".agrv"):
        return p.with_name(p.name[: -len(".agrv")] + ".spans.jsonl")
    return p.with_name(p.name + ".spans.jsonl")


def _span_sidecar_line(record: PassageRecord) -> str:
    obj = {
        "id": record.id,
        "sentences": [[s.start, s.end] for s in record.sentences],
        "propositions": [
            {"sentence": m.sentence_idx, "tokens": list(m.token_indices)} for m in record.propositions
        ],
    }
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def write_index(
    records: Sequence[PassageRecord | QueryEncoding],
    path: str | Path,
) -> IndexManifest:
    """Serialize records to ``path`` (and the span sidecar for passages).

    All records must share one embedding dimensionality and one record type.
    Raises DataError for duplicate ids or dim mismatches before anything is
    written.
    """
    path = Path(path)
    if not records:
        raise DataError("refusing to write an empty index")

    if all(isinstance(r, PassageRecord) for r in records):
        kind = IndexKind.PASSAGES
    elif all(isinstance(r, QueryEncoding) for r in records):
        kind = IndexKind.QUERIES
    else:
        raise DataError("cannot mix passage and query records in one index")

    dim = records[0].embeddings.dim
    for r in records:
        if r.embeddings.dim != dim:
            raise DataError(f"dim mismatch: record '{r.id}' has dim {r.embeddings.dim}, expected {dim}")

    seen: set = set()
    for r in records:
        key = (r.id, r.marker) if isinstance(r, QueryEncoding) else r.id
        if key in seen:
            raise DataError(f"duplicate id '{r.id}'")
        seen.add(key)

    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<III", VERSION, dim, len(records))
    buf += struct.pack("<B", kind.value)
    for r in records:
        id_bytes = r.id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise DataError(f"id too long: '{r.id[:32]}...'")
        buf += struct.pack("<H", len(id_bytes))
        buf += id_bytes
        if kind is IndexKind.QUERIES:
            buf += struct.pack("<B", _MARKER_TO_BYTE[r.marker])
        rows = np.ascontiguousarray(r.embeddings.data, dtype="<f4")
        buf += struct.pack("<I", rows.shape[0])
        buf += rows.tobytes()

    path.write_bytes(bytes(buf))
    if kind is IndexKind.PASSAGES:
        lines = "".join(_span_sidecar_line(r) + "\n" for r in records)
        sidecar_path(path).write_text(lines, encoding="utf-8")
    return IndexManifest(version=VERSION, dim=dim, record_count=len(records), kind=kind)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError("corrupt index: truncated payload")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_index(path: str | Path) -> tuple[list[PassageRecord] | list[QueryEncoding], IndexManifest]:
    """Load an index strictly: any corruption or sidecar mismatch aborts."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read index: {exc}") from exc

    rd = _Reader(data)
    if rd.take(4) != MAGIC:
        raise DataError(f"not an AGRV file: {path}")
    version, dim, count = rd.unpack("<III")
    if version != VERSION:
        raise DataError(f"unsupported index version {version}")
    (kind_byte,) = rd.unpack("<B")
    try:
        kind = IndexKind(kind_byte)
    except ValueError:
        raise DataError(f"corrupt index: unknown kind byte {kind_byte}") from None

    raw: list[tuple[str, Marker | None, np.ndarray]] = []
    for _ in range(count):
        (id_len,) = rd.unpack("<H")
        rec_id = rd.take(id_len).decode("utf-8")
        marker = None
        if kind is IndexKind.QUERIES:
            (marker_byte,) = rd.unpack("<B")
            if marker_byte not in _BYTE_TO_MARKER:
                raise DataError(f"corrupt index: unknown marker byte {marker_byte} for '{rec_id}'")
            marker = _BYTE_TO_MARKER[marker_byte]
        (tokens,) = rd.unpack("<I")
        payload = rd.take(tokens * dim * 4)
        rows = np.frombuffer(payload, dtype="<f4").reshape(tokens, dim).astype(np.float64)
        raw.append((rec_id, marker, rows))
    if rd.pos != len(data):
        raise DataError("corrupt index: trailing bytes after last record")

    manifest = IndexManifest(version=version, dim=dim, record_count=count, kind=kind)

    if kind is IndexKind.QUERIES:
        queries = [
            QueryEncoding(id=rec_id, marker=marker, embeddings=EmbeddingMatrix(rows))
            for rec_id, marker, rows in raw
        ]
        return queries, manifest

    spans = _read_sidecar(sidecar_path(path))
    records: list[PassageRecord] = []
    for rec_id, _, rows in raw:
        if rec_id not in spans:
            raise DataError(f"missing spans for '{rec_id}'")
        sentences, propositions = spans.pop(rec_id)
        record = PassageRecord(
            id=rec_id,
            embeddings=EmbeddingMatrix(rows),
            sentences=sentences,
            propositions=propositions,
        )
        violations = validate_passage(record)
        if violations:
            raise DataError(f"invalid record '{rec_id}': " + "; ".join(violations))
        records.append(record)
    if spans:
        extra = next(iter(spans))
        raise DataError(f"sidecar entry '{extra}' has no record in the index")
    return records, manifest


def _read_sidecar(path: Path) -> dict[str, tuple[tuple[SentenceSpan, ...], tuple[PropositionMask, ...]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"missing spans sidecar: {exc}") from exc
    out: dict[str, tuple[tuple[SentenceSpan, ...], tuple[PropositionMask, ...]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rec_id = obj["id"]
            sentences = tuple(SentenceSpan(int(s), int(e)) for s, e in obj["sentences"])
            propositions = tuple(
                PropositionMask(int(m["sentence"]), tuple(int(t) for t in m["tokens"]))
                for m in obj.get("propositions", [])
            )
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad sidecar line {lineno}: {exc}") from exc
        if rec_id in out:
            raise DataError(f"duplicate sidecar entry '{rec_id}'")
        out[rec_id] = (sentences, propositions)
    return out
