"""Desk-scale distillation training of the toy encoder.

The loop optimizes the two-level loss stack with plain full-batch gradient
descent. Teacher scores are synthesized from answer-containment labels, so
the whole study runs from a corpus file and a seed with no model downloads.

Two knobs shape the study. The training mode selects the objective:
passage_only optimizes the passage-level term alone, multi_granular adds
the sentence-level term. The marker mode selects which query conditioning
the sentence objective trains with and which one sentence ranking uses at
evaluation time, so train/rank mismatches can be measured.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import DataError, Marker, SentenceSpan
from .losses import (
    LossReport,
    TeacherScores,
    aggregate_sentence_loss,
    passage_loss,
    sentence_loss_per_passage,
    softmax_dist,
)
from .metrics import normalize_text
from .toy_encoder import (
    ForwardCache,
    ParamGrads,
    Role,
    ToyEncoder,
    backward_rows,
    forward_with_cache,
    init_toy_encoder,
    pack_grads,
    unpack_params,
)

CSV_HEADER = "epoch,l_psg,l_sent,total,sentence_agreement,passage_agreement"
ABLATION_CSV_HEADER = "marker_mode,l_psg,l_sent,total,sentence_agreement,passage_agreement"

POSITIVE_SENTENCE_SCORE = 5.0
NEGATIVE_SENTENCE_SCORE = 0.0
TEACHER_NOISE = 0.1

CKPT_MAGIC = b"AGTC"
CKPT_VERSION = 1


class TrainingMode(Enum):
    PASSAGE_ONLY = "passage_only"
    MULTI_GRANULAR = "multi_granular"


@dataclass(frozen=True)
class MarkerMode:
    """Query conditioning for the sentence-level objective: the marker the
    sentence loss trains through, and the marker sentence ranking uses."""

    train: Marker
    rank: Marker

    @property
    def name(self) -> str:
        return f"{self.train.value}-{self.rank.value}"


MARKER_MODES: dict[str, MarkerMode] = {
    "sentence-sentence": MarkerMode(Marker.SENTENCE, Marker.SENTENCE),
    "sentence-passage": MarkerMode(Marker.SENTENCE, Marker.PASSAGE),
    "passage-passage": MarkerMode(Marker.PASSAGE, Marker.PASSAGE),
}


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite; carries the history so far."""

    def __init__(self, epoch: int, history: tuple["EpochMetrics", ...]):
        super().__init__(f"training diverged at epoch {epoch}: loss is not finite")
        self.epoch = epoch
        self.history = history


@dataclass(frozen=True)
class TrainingPassage:
    id: str
    sentences: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        sents = tuple(tuple(s) for s in self.sentences)
        if not sents or any(not s for s in sents):
            raise DataError(f"passage '{self.id}' has an empty sentence")
        object.__setattr__(self, "sentences", sents)

    def sentence_text(self, idx: int) -> str:
        return " ".join(self.sentences[idx])

    def text(self) -> str:
        return " ".join(w for s in self.sentences for w in s)


@dataclass(frozen=True)
class TrainingExample:
    query_id: str
    query: tuple[str, ...]
    answer: str
    passages: tuple[TrainingPassage, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "query", tuple(self.query))
        object.__setattr__(self, "passages", tuple(self.passages))
        if not self.query:
            raise DataError(f"example '{self.query_id}' has an empty query")
        if len(self.passages) < 2:
            raise DataError(f"example '{self.query_id}' needs >= 2 passages")


def save_corpus(corpus: tuple[TrainingExample, ...] | list[TrainingExample], path: str | Path) -> None:
    lines = []
    for ex in corpus:
        obj = {
            "query_id": ex.query_id,
            "query": list(ex.query),
            "answer": ex.answer,
            "passages": [
                {"id": p.id, "sentences": [list(s) for s in p.sentences]} for p in ex.passages
            ],
        }
        lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_corpus(path: str | Path) -> tuple[TrainingExample, ...]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(
                TrainingExample(
                    query_id=obj["query_id"],
                    query=tuple(obj["query"]),
                    answer=obj["answer"],
                    passages=tuple(
                        TrainingPassage(p["id"], tuple(tuple(s) for s in p["sentences"]))
                        for p in obj["passages"]
                    ),
                )
            )
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise DataError(f"bad corpus line {lineno}: {exc}") from exc
    if not out:
        raise DataError(f"empty corpus: {path}")
    return tuple(out)


def build_vocab(corpus: tuple[TrainingExample, ...] | list[TrainingExample]) -> dict[str, int]:
    """Deterministic word-to-id mapping: sorted unique words of the corpus."""
    words = set()
    for ex in corpus:
        words.update(ex.query)
        for p in ex.passages:
            for s in p.sentences:
                words.update(s)
    return {w: i for i, w in enumerate(sorted(words))}


def synth_sentence_labels(sentence_texts: list[str] | tuple[str, ...], answer: str) -> list[int]:
    """1 iff the sentence contains the answer, by normalized substring."""
    if not answer.strip():
        raise DataError("empty answer")
    needle = normalize_text(answer)
    return [1 if needle in normalize_text(s) else 0 for s in sentence_texts]


def synthesize_teacher(example: TrainingExample, rng: np.random.Generator) -> TeacherScores:
    """Label-shaped supervision: answer-bearing units get a high score,
    the rest a low one, plus small noise to break ties. The noise draw
    order is fixed (passage score first, then its sentences)."""
    psg_scores = []
    sent_scores = []
    for p in example.passages:
        labels = synth_sentence_labels([p.sentence_text(j) for j in range(len(p.sentences))], example.answer)
        base = POSITIVE_SENTENCE_SCORE if any(labels) else NEGATIVE_SENTENCE_SCORE
        psg_scores.append(base + float(rng.uniform(-TEACHER_NOISE, TEACHER_NOISE)))
        row = []
        for lab in labels:
            base_s = POSITIVE_SENTENCE_SCORE if lab else NEGATIVE_SENTENCE_SCORE
            row.append(base_s + float(rng.uniform(-TEACHER_NOISE, TEACHER_NOISE)))
        sent_scores.append(tuple(row))
    return TeacherScores(passage_scores=tuple(psg_scores), sentence_scores=tuple(sent_scores))


def make_synthetic_corpus(
    n_queries: int = 50,
    n_passages: int = 8,
    n_sentences: int = 4,
    seed: int = 0,
) -> tuple[TrainingExample, ...]:
    """Corpus that bakes in the lexical-overlap trap: each positive passage
    holds one answer-bearing sentence plus a distractor made of the query's
    own words, so sentence ranking by surface match picks the wrong one.

    Words are fixed-width so no word is a substring of another.
    """
    if n_sentences < 2 or n_passages < 2:
        raise DataError("corpus needs >= 2 sentences per passage and >= 2 passages")
    rng = np.random.default_rng(seed)
    width = len(str(max(4 * n_queries + 40, 10) - 1))
    word = lambda i: f"w{i:0{width}d}"
    answers = [word(i) for i in range(n_queries)]
    contexts = [[word(n_queries + 3 * q + j) for j in range(3)] for q in range(n_queries)]
    filler_base = 4 * n_queries
    fillers = [word(filler_base + i) for i in range(40)]

    def filler_sentence() -> tuple[str, ...]:
        return tuple(rng.choice(fillers, size=3, replace=False).tolist())

    examples = []
    for q in range(n_queries):
        positive_idx = int(rng.integers(0, n_passages))
        answer_pos = int(rng.integers(0, n_sentences))
        distractor_pos = int(rng.integers(0, n_sentences - 1))
        if distractor_pos >= answer_pos:
            distractor_pos += 1
        passages = []
        for p in range(n_passages):
            sentences = []
            for s in range(n_sentences):
                if p == positive_idx and s == answer_pos:
                    extra = rng.choice(fillers, size=2, replace=False).tolist()
                    sentences.append((answers[q], *extra))
                elif p == positive_idx and s == distractor_pos:
                    sentences.append(tuple(contexts[q]))
                else:
                    sentences.append(filler_sentence())
            passages.append(TrainingPassage(id=f"q{q:03d}-p{p}", sentences=tuple(sentences)))
        examples.append(
            TrainingExample(
                query_id=f"q{q:03d}",
                query=tuple(contexts[q]),
                answer=answers[q],
                passages=tuple(passages),
            )
        )
    return tuple(examples)


@dataclass(frozen=True)
class TokenizedPassage:
    id: str
    token_ids: tuple[int, ...]
    spans: tuple[SentenceSpan, ...]


@dataclass(frozen=True)
class TokenizedExample:
    query_id: str
    query_ids: tuple[int, ...]
    passages: tuple[TokenizedPassage, ...]


def tokenize_example(example: TrainingExample, vocab: dict[str, int]) -> TokenizedExample:
    def ids(words: tuple[str, ...]) -> tuple[int, ...]:
        try:
            return tuple(vocab[w] for w in words)
        except KeyError as exc:
            raise DataError(f"unknown token {exc.args[0]!r}") from None

    passages = []
    for p in example.passages:
        token_ids: list[int] = []
        spans = []
        for s in p.sentences:
            start = len(token_ids)
            token_ids.extend(ids(s))
            spans.append(SentenceSpan(start, len(token_ids)))
        passages.append(TokenizedPassage(p.id, tuple(token_ids), tuple(spans)))
    return TokenizedExample(example.query_id, ids(example.query), tuple(passages))


@dataclass(frozen=True)
class TrainConfig:
    mode: TrainingMode = TrainingMode.MULTI_GRANULAR
    marker_mode: MarkerMode | None = None  # None: natural default for the mode
    epochs: int = 120
    lr: float = 0.5
    seed: int = 0
    temperature: float = 1.0
    input_dim: int = 12
    output_dim: int = 12
    marker_scale: float = 0.25

    def resolved_marker_mode(self) -> MarkerMode:
        if self.marker_mode is not None:
            return self.marker_mode
        if self.mode is TrainingMode.MULTI_GRANULAR:
            return MARKER_MODES["sentence-sentence"]
        return MARKER_MODES["passage-passage"]


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    l_psg: float
    l_sent: float
    total: float
    sentence_agreement: float
    passage_agreement: float


@dataclass(frozen=True)
class ExamplePass:
    """Everything one query's forward/backward yields."""

    report: LossReport
    grads: ParamGrads | None
    sentence_agreement: bool
    passage_agreement: bool
    min_argmax_gap: float


def _maxsim_with_argmax(sims: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Score, per-query-token argmax (lowest index on ties), and the
    smallest top-vs-second gap across query tokens (inf for one column)."""
    per_max = sims.max(axis=1)
    args = sims.argmax(axis=1)
    if sims.shape[1] < 2:
        gap = math.inf
    else:
        part = np.partition(sims, -2, axis=1)
        gap = float((part[:, -1] - part[:, -2]).min())
    return float(per_max.sum()), args, gap


def evaluate_example(
    encoder: ToyEncoder,
    example: TokenizedExample,
    teacher: TeacherScores,
    cfg: TrainConfig,
    with_grads: bool = False,
) -> ExamplePass:
    """Forward (and optionally backward) pass for one query's passage set.

    Gradients are routed through the scoring chain by hand: the KL/softmax
    layer gives d(loss)/d(score), each score passes its gradient to the
    argmax row pair only (ties go to the lowest index, matching the
    scorer), and the encoder maps row gradients onto parameters.
    """
    mm = cfg.resolved_marker_mode()
    temp = cfg.temperature
    passages = example.passages
    if len(teacher.passage_scores) != len(passages):
        raise DataError(
            f"length mismatch: {len(teacher.passage_scores)} teacher scores "
            f"for {len(passages)} passages"
        )
    if len(teacher.sentence_scores) != len(passages):
        raise DataError(
            f"length mismatch: {len(teacher.sentence_scores)} teacher sentence rows "
            f"for {len(passages)} passages"
        )

    qd_rows, qd_cache = forward_with_cache(encoder, example.query_ids, Role.QUERY_DEFAULT)
    need_sentence_encoding = Marker.SENTENCE in (mm.train, mm.rank)
    if need_sentence_encoding:
        qs_rows, qs_cache = forward_with_cache(encoder, example.query_ids, Role.QUERY_SENTENCE)
    else:
        qs_rows, qs_cache = None, None

    def query_rows(marker: Marker) -> np.ndarray:
        return qs_rows if marker is Marker.SENTENCE else qd_rows

    p_rows: list[np.ndarray] = []
    p_caches: list[ForwardCache] = []
    psg_scores: list[float] = []
    psg_args: list[np.ndarray] = []
    train_sent_scores: list[list[float]] = []
    train_sent_args: list[list[np.ndarray]] = []
    rank_sent_scores: list[list[float]] = []
    min_gap = math.inf

    for p in passages:
        if len(teacher.sentence_scores[len(p_rows)]) != len(p.spans):
            raise DataError(f"length mismatch: teacher sentence row for '{p.id}'")
        rows, cache = forward_with_cache(encoder, p.token_ids, Role.PASSAGE)
        p_rows.append(rows)
        p_caches.append(cache)

        sims_d = qd_rows @ rows.T
        score, args, gap = _maxsim_with_argmax(sims_d)
        psg_scores.append(score)
        psg_args.append(args)
        min_gap = min(min_gap, gap)

        sims_train = query_rows(mm.train) @ rows.T
        sims_rank = sims_train if mm.rank is mm.train else query_rows(mm.rank) @ rows.T
        t_scores: list[float] = []
        t_args: list[np.ndarray] = []
        r_scores: list[float] = []
        for span in p.spans:
            s_score, s_args, s_gap = _maxsim_with_argmax(sims_train[:, span.start : span.end])
            t_scores.append(s_score)
            t_args.append(s_args + span.start)
            min_gap = min(min_gap, s_gap)
            if sims_rank is sims_train:
                r_scores.append(s_score)
            else:
                r_scores.append(float(sims_rank[:, span.start : span.end].max(axis=1).sum()))
        train_sent_scores.append(t_scores)
        train_sent_args.append(t_args)
        rank_sent_scores.append(r_scores)

    l_psg = passage_loss(psg_scores, teacher.passage_scores, temp)
    per_l_s = tuple(
        sentence_loss_per_passage(train_sent_scores[i], teacher.sentence_scores[i], temp)
        for i in range(len(passages))
    )
    l_sent = aggregate_sentence_loss(per_l_s, teacher.passage_scores, temp)
    report = LossReport(l_psg=l_psg, per_passage_l_s=per_l_s, l_sent=l_sent, total=l_psg + l_sent)

    teacher_top = int(np.argmax(teacher.passage_scores))
    passage_agreement = int(np.argmax(psg_scores)) == teacher_top
    teacher_sent_top = int(np.argmax(teacher.sentence_scores[teacher_top]))
    sentence_agreement = int(np.argmax(rank_sent_scores[teacher_top])) == teacher_sent_top

    grads = None
    if with_grads:
        grads = ParamGrads.zeros(encoder)
        d_qd = np.zeros_like(qd_rows)
        d_qs = np.zeros_like(qs_rows) if qs_rows is not None else None
        d_qtrain = d_qs if mm.train is Marker.SENTENCE else d_qd
        q_train = query_rows(mm.train)

        # d(l_psg)/d(score_i) for the softmax-KL composition
        g_psg = (softmax_dist(psg_scores, temp) - softmax_dist(teacher.passage_scores, temp)) / temp
        # teacher-side passage weights for the sentence term
        weights = softmax_dist(teacher.passage_scores, temp)

        for i, p in enumerate(passages):
            d_rows_p = np.zeros_like(p_rows[i])

            g = float(g_psg[i])
            if g != 0.0:
                d_qd += g * p_rows[i][psg_args[i]]
                np.add.at(d_rows_p, psg_args[i], g * qd_rows)

            if cfg.mode is TrainingMode.MULTI_GRANULAR and len(p.spans) >= 1:
                g_sent = weights[i] * (
                    softmax_dist(train_sent_scores[i], temp)
                    - softmax_dist(teacher.sentence_scores[i], temp)
                ) / temp
                for j in range(len(p.spans)):
                    gj = float(g_sent[j])
                    if gj == 0.0:
                        continue
                    args = train_sent_args[i][j]
                    d_qtrain += gj * p_rows[i][args]
                    np.add.at(d_rows_p, args, gj * q_train)

            backward_rows(encoder, p_caches[i], d_rows_p, grads)

        backward_rows(encoder, qd_cache, d_qd, grads)
        if qs_cache is not None:
            backward_rows(encoder, qs_cache, d_qs, grads)

    return ExamplePass(
        report=report,
        grads=grads,
        sentence_agreement=sentence_agreement,
        passage_agreement=passage_agreement,
        min_argmax_gap=min_gap,
    )


def example_loss_and_grad(
    template: ToyEncoder,
    example: TokenizedExample,
    teacher: TeacherScores,
    cfg: TrainConfig,
):
    """Flat-vector objective for gradient checking: params -> (loss, grad).

    The loss is the full two-level objective in the given config; gradients
    for parameters the instance never touches are exactly zero.
    """

    def fn(flat: np.ndarray) -> tuple[float, np.ndarray]:
        enc = unpack_params(template, flat)
        out = evaluate_example(enc, example, teacher, cfg, with_grads=True)
        loss = out.report.total if cfg.mode is TrainingMode.MULTI_GRANULAR else out.report.l_psg
        return loss, pack_grads(out.grads)

    return fn


@dataclass(frozen=True)
class TrainResult:
    encoder: ToyEncoder
    vocab: dict[str, int]
    history: tuple[EpochMetrics, ...]
    config: TrainConfig


def abort_on_divergence(row: EpochMetrics, history: list[EpochMetrics]) -> None:
    if not all(map(math.isfinite, (row.l_psg, row.l_sent, row.total))):
        raise TrainingDiverged(row.epoch, tuple(history))


def train_toy(
    corpus: tuple[TrainingExample, ...] | list[TrainingExample],
    cfg: TrainConfig,
) -> TrainResult:
    """Full-batch gradient descent on the selected objective.

    The history has one row per observed parameter state: row 0 is the
    untrained encoder, row e the state after e updates; epochs=0 therefore
    records initial metrics only. Bit-reproducible for a fixed seed.
    """
    if not corpus:
        raise DataError("empty corpus")
    if cfg.epochs < 0:
        raise DataError("epochs must be >= 0")
    vocab = build_vocab(corpus)
    encoder = init_toy_encoder(len(vocab), cfg.input_dim, cfg.output_dim, cfg.seed, cfg.marker_scale)
    teacher_rng = np.random.default_rng([cfg.seed, 17])
    teachers = [synthesize_teacher(ex, teacher_rng) for ex in corpus]
    tokenized = [tokenize_example(ex, vocab) for ex in corpus]

    history: list[EpochMetrics] = []
    for epoch in range(cfg.epochs + 1):
        updating = epoch < cfg.epochs
        sum_grads = ParamGrads.zeros(encoder) if updating else None
        l_psg = l_sent = total = 0.0
        sent_hits = psg_hits = 0
        for ex, teach in zip(tokenized, teachers):
            out = evaluate_example(encoder, ex, teach, cfg, with_grads=updating)
            l_psg += out.report.l_psg
            l_sent += out.report.l_sent
            total += out.report.total
            sent_hits += out.sentence_agreement
            psg_hits += out.passage_agreement
            if updating:
                sum_grads.add_scaled(out.grads, 1.0)
        n = len(corpus)
        row = EpochMetrics(
            epoch=epoch,
            l_psg=float(l_psg / n),
            l_sent=float(l_sent / n),
            total=float(total / n),
            sentence_agreement=sent_hits / n,
            passage_agreement=psg_hits / n,
        )
        abort_on_divergence(row, history)
        history.append(row)
        if updating:
            step = -cfg.lr / n
            encoder.vocab_embed += step * sum_grads.vocab_embed
            encoder.projection += step * sum_grads.projection
            encoder.query_default_marker += step * sum_grads.query_default_marker
            encoder.query_sentence_marker += step * sum_grads.query_sentence_marker
            encoder.passage_marker += step * sum_grads.passage_marker

    return TrainResult(encoder=encoder, vocab=vocab, history=tuple(history), config=cfg)


def history_csv_lines(history: tuple[EpochMetrics, ...] | list[EpochMetrics]) -> list[str]:
    lines = [CSV_HEADER]
    for row in history:
        lines.append(
            f"{row.epoch},{float(row.l_psg)!r},{float(row.l_sent)!r},{float(row.total)!r},"
            f"{float(row.sentence_agreement)!r},{float(row.passage_agreement)!r}"
        )
    return lines


def marker_ablation(
    corpus: tuple[TrainingExample, ...] | list[TrainingExample],
    base_cfg: TrainConfig,
) -> dict[str, TrainResult]:
    """Paired runs over all marker modes: same corpus, same seed, same
    everything except the sentence-objective conditioning."""
    results = {}
    for name, mm in MARKER_MODES.items():
        cfg = TrainConfig(
            mode=TrainingMode.MULTI_GRANULAR,
            marker_mode=mm,
            epochs=base_cfg.epochs,
            lr=base_cfg.lr,
            seed=base_cfg.seed,
            temperature=base_cfg.temperature,
            input_dim=base_cfg.input_dim,
            output_dim=base_cfg.output_dim,
            marker_scale=base_cfg.marker_scale,
        )
        results[name] = train_toy(corpus, cfg)
    return results


def ablation_csv_lines(results: dict[str, TrainResult]) -> list[str]:
    lines = [ABLATION_CSV_HEADER]
    for name in MARKER_MODES:
        final = results[name].history[-1]
        lines.append(
            f"{name},{float(final.l_psg)!r},{float(final.l_sent)!r},{float(final.total)!r},"
            f"{float(final.sentence_agreement)!r},{float(final.passage_agreement)!r}"
        )
    return lines


def checkpoint_vocab_path(path: str | Path) -> Path:
    p = Path(path)
    if p.name.endswith(".agtc"):
        return p.with_name(p.name[: -len(".agtc")] + ".vocab.json")
    return p.with_name(p.name + ".vocab.json")


def save_encoder(encoder: ToyEncoder, vocab: dict[str, int], path: str | Path) -> None:
    """Binary checkpoint: magic, version, sizes, then the parameter arrays
    as binary32 little-endian in a fixed order. Vocab goes to a JSON
    sidecar as a list of words in id order."""
    words = [None] * len(vocab)
    for w, i in vocab.items():
        if not (0 <= i < len(vocab)) or words[i] is not None:
            raise DataError("vocab ids must be a permutation of 0..V-1")
        words[i] = w
    if len(vocab) != encoder.vocab_size:
        raise DataError(f"vocab has {len(vocab)} words, encoder expects {encoder.vocab_size}")
    buf = bytearray()
    buf += CKPT_MAGIC
    buf += struct.pack(
        "<IIII", CKPT_VERSION, encoder.vocab_size, encoder.input_dim, encoder.output_dim
    )
    for arr in (
        encoder.vocab_embed,
        encoder.projection,
        encoder.query_default_marker,
        encoder.query_sentence_marker,
        encoder.passage_marker,
    ):
        buf += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(buf))
    checkpoint_vocab_path(path).write_text(
        json.dumps(words, separators=(",", ":"), ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_encoder(path: str | Path) -> tuple[ToyEncoder, dict[str, int]]:
    data = Path(path).read_bytes()
    if data[:4] != CKPT_MAGIC:
        raise DataError(f"not a toy encoder checkpoint: {path}")
    if len(data) < 20:
        raise DataError("corrupt checkpoint: truncated header")
    version, v, d_in, d = struct.unpack("<IIII", data[4:20])
    if version != CKPT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    shapes = [(v, d_in), (d_in, d), (d_in,), (d_in,), (d_in,)]
    arrays = []
    offset = 20
    for shape in shapes:
        size = int(np.prod(shape)) * 4
        if offset + size > len(data):
            raise DataError("corrupt checkpoint: truncated payload")
        arrays.append(
            np.frombuffer(data[offset : offset + size], dtype="<f4").astype(np.float64).reshape(shape)
        )
        offset += size
    if offset != len(data):
        raise DataError("corrupt checkpoint: trailing bytes")
    try:
        words = json.loads(checkpoint_vocab_path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"missing checkpoint vocab: {exc}") from exc
    if not isinstance(words, list) or len(words) != v:
        raise DataError("checkpoint vocab does not match the stored vocab size")
    encoder = ToyEncoder(
        vocab_embed=arrays[0],
        projection=arrays[1],
        query_default_marker=arrays[2],
        query_sentence_marker=arrays[3],
        passage_marker=arrays[4],
    )
    return encoder, {w: i for i, w in enumerate(words)}
