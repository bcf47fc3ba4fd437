"""Command-line front end wiring indexing, ranking, training, and citation.

Every command reads and writes plain files — there is no server component.
Identical inputs (and seed) produce byte-identical outputs.  The resolved run
configuration travels with every artifact: CSV outputs carry it as a leading
``#`` comment line, everything else gets a ``.run.json`` sidecar.

Exit codes: 0 on success, 2 on usage errors, 3 on bad input data.  The
``AGRAME_THREADS`` environment variable caps the worker count for commands
that fan out over queries; results are merged in input order either way.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from .citation import (
    CitationVariant,
    cite_answer,
    load_generated_answers,
    save_citations,
    sentence_encoding_id,
)
from .core import (
    DataError,
    Marker,
    PassageRecord,
    PropositionMask,
    QueryEncoding,
    RankingConfig,
    SentenceSpan,
)
from .metrics import (
    CitedSentence,
    SubstringOracle,
    citation_scores,
    parse_qrels,
    precision_at_1,
    recall_at_5,
)
from .scorer import breakdown_record, rank_passages, rank_propositions, rank_sentences
from .storage import IndexKind, read_index, write_index
from .toy_encoder import Role, toy_forward
from .training import (
    MARKER_MODES,
    TrainConfig,
    TrainingDiverged,
    TrainingMode,
    ablation_csv_lines,
    history_csv_lines,
    load_corpus,
    load_encoder,
    make_synthetic_corpus,
    marker_ablation,
    save_corpus,
    save_encoder,
    train_toy,
)

LEVELS = ("passage", "sentence", "proposition")


def thread_count() -> int:
    """Worker cap from ``AGRAME_THREADS`` (default 1)."""
    raw = os.environ.get("AGRAME_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise DataError(f"AGRAME_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise DataError(f"AGRAME_THREADS must be a positive integer, got {raw!r}")
    return value


def _config_json(command: str, options: dict) -> str:
    payload = dict(options)
    payload["command"] = command
    payload["threads"] = thread_count()
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def run_sidecar_path(path: str | Path) -> Path:
    """Where the resolved-config sidecar for an output file lives."""
    p = Path(path)
    for ext in (".jsonl", ".agrv", ".csv"):
        if p.name.endswith(ext):
            return p.with_name(p.name[: -len(ext)] + ".run.json")
    return p.with_name(p.name + ".run.json")


def _write_sidecar(out: str | Path, command: str, options: dict) -> None:
    run_sidecar_path(out).write_text(_config_json(command, options) + "\n", encoding="utf-8")


def _read_jsonl(path: str | Path) -> list[dict]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    records: list[dict] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad line {lineno} in {path}: {exc}")
        if not isinstance(obj, dict):
            raise DataError(f"bad line {lineno} in {path}: expected a JSON object")
        records.append(obj)
    if not records:
        raise DataError(f"no records in {path}")
    return records


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise DataError(f"missing field {key!r} in {where}")
    return obj[key]


def _word_list(value, where: str) -> list[str]:
    if not isinstance(value, list) or not value or not all(isinstance(w, str) for w in value):
        raise DataError(f"{where} must be a non-empty list of strings")
    return value


def _token_ids(words: Sequence[str], vocab: dict[str, int], where: str) -> list[int]:
    ids = []
    for w in words:
        if w not in vocab:
            raise DataError(f"unknown token {w!r} in {where}")
        ids.append(vocab[w])
    return ids


# ---------------------------------------------------------------------------
# index


def _parse_passage_line(obj: dict, where: str):
    pid = _field(obj, "id", where)
    if not isinstance(pid, str) or not pid:
        raise DataError(f"{where}: 'id' must be a non-empty string")
    raw_sentences = _field(obj, "sentences", where)
    if not isinstance(raw_sentences, list) or not raw_sentences:
        raise DataError(f"{where}: 'sentences' must be a non-empty list")
    sentences = [_word_list(s, f"{where}: sentence {i}") for i, s in enumerate(raw_sentences)]
    props = []
    for j, p in enumerate(obj.get("propositions", [])):
        if not isinstance(p, dict):
            raise DataError(f"{where}: proposition {j} must be an object")
        props.append((int(_field(p, "sentence", where)), [int(t) for t in _field(p, "tokens", where)]))
    return pid, sentences, props, obj.get("text")


def _spans_for(sentences: Sequence[Sequence[str]]) -> tuple[SentenceSpan, ...]:
    spans, start = [], 0
    for s in sentences:
        spans.append(SentenceSpan(start, start + len(s)))
        start += len(s)
    return tuple(spans)


def _build_passage(pid, sentences, props, text, rows) -> PassageRecord:
    try:
        return PassageRecord(
            id=pid,
            embeddings=rows,
            sentences=_spans_for(sentences),
            propositions=tuple(
                PropositionMask(sentence_idx=s, token_indices=tuple(toks)) for s, toks in props
            ),
            text=text,
        )
    except DataError as exc:
        raise DataError(f"passage '{pid}': {exc}")


def cmd_index(args) -> int:
    out_path = f"{args.out}.agrv"
    if args.passages:
        entries = [
            _parse_passage_line(obj, f"{args.passages} line {i}")
            for i, obj in enumerate(_read_jsonl(args.passages), start=1)
        ]
        records: list = []
        if args.toy_encoder:
            encoder, vocab = load_encoder(args.toy_encoder)
            for pid, sentences, props, text in entries:
                ids = [t for s in sentences for t in _token_ids(s, vocab, f"passage '{pid}'")]
                rows = toy_forward(encoder, ids, Role.PASSAGE)
                records.append(_build_passage(pid, sentences, props, text, rows))
        else:
            source, src_manifest = read_index(args.embeddings)
            if src_manifest.kind is not IndexKind.PASSAGES:
                raise DataError(f"--embeddings must hold passage rows, got {args.embeddings}")
            by_id = {r.id: r for r in source}
            for pid, sentences, props, text in entries:
                if pid not in by_id:
                    raise DataError(f"missing embedding rows for passage '{pid}'")
                rows = by_id[pid].embeddings
                n_tokens = sum(len(s) for s in sentences)
                if rows.rows != n_tokens:
                    raise DataError(
                        f"passage '{pid}': {rows.rows} embedding rows for {n_tokens} tokens"
                    )
                records.append(_build_passage(pid, sentences, props, text, rows))
        label = "passages"
    else:
        records = []
        if args.toy_encoder:
            encoder, vocab = load_encoder(args.toy_encoder)
            for i, obj in enumerate(_read_jsonl(args.queries), start=1):
                where = f"{args.queries} line {i}"
                qid = _field(obj, "id", where)
                words = _word_list(_field(obj, "tokens", where), f"{where}: 'tokens'")
                ids = _token_ids(words, vocab, f"query '{qid}'")
                records.append(
                    QueryEncoding(qid, Marker.PASSAGE, toy_forward(encoder, ids, Role.QUERY_DEFAULT))
                )
                records.append(
                    QueryEncoding(qid, Marker.SENTENCE, toy_forward(encoder, ids, Role.QUERY_SENTENCE))
                )
        else:
            source, src_manifest = read_index(args.embeddings)
            if src_manifest.kind is not IndexKind.QUERIES:
                raise DataError(f"--embeddings must hold query encodings, got {args.embeddings}")
            grouped: dict[str, list[QueryEncoding]] = {}
            for rec in source:
                grouped.setdefault(rec.id, []).append(rec)
            for i, obj in enumerate(_read_jsonl(args.queries), start=1):
                qid = _field(obj, "id", f"{args.queries} line {i}")
                if qid not in grouped:
                    raise DataError(f"missing encodings for query '{qid}'")
                records.extend(grouped[qid])
        label = "query encodings"

    manifest = write_index(records, out_path)
    _write_sidecar(
        out_path,
        "index",
        {
            "passages": args.passages,
            "queries": args.queries,
            "toy_encoder": args.toy_encoder,
            "embeddings": args.embeddings,
            "out": args.out,
        },
    )
    print(f"indexed {manifest.record_count} {label} -> {out_path} (dim {manifest.dim})")
    return 0


# ---------------------------------------------------------------------------
# rank


def _group_queries(records: Sequence[QueryEncoding]):
    grouped: dict[str, dict[Marker, QueryEncoding]] = {}
    for rec in records:
        grouped.setdefault(rec.id, {})[rec.marker] = rec
    return grouped


def _rank_one(qid, encodings, passages, level, cfg, top_k, with_breakdown) -> list[str]:
    default = encodings.get(Marker.PASSAGE)
    if default is None:
        raise DataError(f"query '{qid}' has no passage-marker encoding")
    if level == "passage":
        units = rank_passages(default, passages, with_breakdown=with_breakdown)
    elif level == "sentence":
        prime = encodings.get(Marker.SENTENCE)
        if prime is None:
            raise DataError(f"query '{qid}' has no sentence-marker encoding")
        units = rank_sentences(prime, default, passages, cfg, with_breakdown=with_breakdown)
    else:
        units = rank_propositions(default, passages, with_breakdown=with_breakdown)
    units = units[:top_k]
    lines = [
        _dump(
            {
                "query_id": qid,
                "rank": i,
                "passage_id": u.passage_id,
                "unit": u.unit_label(),
                "score": u.score,
            }
        )
        for i, u in enumerate(units, start=1)
    ]
    if with_breakdown:
        lines.extend(_dump(breakdown_record(qid, u)) for u in units)
    return lines


def cmd_rank(args) -> int:
    passages, p_manifest = read_index(args.index)
    if p_manifest.kind is not IndexKind.PASSAGES:
        raise DataError(f"--index must point to a passages index, got {args.index}")
    queries, q_manifest = read_index(args.queries)
    if q_manifest.kind is not IndexKind.QUERIES:
        raise DataError(f"--queries must point to a query index, got {args.queries}")
    grouped = _group_queries(queries)
    cfg = RankingConfig(alpha=args.alpha)

    def run(item):
        qid, encodings = item
        return _rank_one(qid, encodings, passages, args.level, cfg, args.top_k, args.breakdown)

    workers = thread_count()
    items = list(grouped.items())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, items))
    else:
        chunks = [run(item) for item in items]

    lines = [line for chunk in chunks for line in chunk]
    Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    _write_sidecar(
        args.out,
        "rank",
        {
            "index": args.index,
            "queries": args.queries,
            "level": args.level,
            "alpha": args.alpha,
            "top_k": args.top_k,
            "breakdown": bool(args.breakdown),
            "out": args.out,
        },
    )
    print(f"ranked {len(items)} queries at level {args.level} -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# train-toy


def _train_config_options(args, cfg: TrainConfig) -> dict:
    return {
        "corpus": args.corpus,
        "mode": cfg.mode.value,
        "marker_mode": cfg.resolved_marker_mode().name,
        "epochs": cfg.epochs,
        "lr": cfg.lr,
        "seed": cfg.seed,
        "temperature": cfg.temperature,
        "input_dim": cfg.input_dim,
        "output_dim": cfg.output_dim,
        "marker_scale": cfg.marker_scale,
        "out": args.out,
        "ablation": bool(args.ablation),
    }


def _write_csv(path: str | Path, config_line: str, rows: list[str]) -> None:
    text = "# config: " + config_line + "\n" + "".join(row + "\n" for row in rows)
    Path(path).write_text(text, encoding="utf-8")


def cmd_train_toy(args) -> int:
    corpus = load_corpus(args.corpus)
    mode = TrainingMode(args.mode)
    marker_mode = MARKER_MODES[args.marker_mode] if args.marker_mode else None
    cfg = TrainConfig(
        mode=mode, marker_mode=marker_mode, epochs=args.epochs, lr=args.lr, seed=args.seed
    )
    options = _train_config_options(args, cfg)
    if args.ablation:
        results = marker_ablation(corpus, cfg)
        _write_csv(f"{args.out}.ablation.csv", _config_json("train-toy", options), ablation_csv_lines(results))
        for name, result in results.items():
            per_mode = dict(options, marker_mode=name)
            _write_csv(
                f"{args.out}.{name}.metrics.csv",
                _config_json("train-toy", per_mode),
                history_csv_lines(result.history),
            )
        _write_sidecar(args.out, "train-toy", options)
        print(f"ablation over {len(results)} marker modes -> {args.out}.ablation.csv")
        for name, result in results.items():
            final = result.history[-1]
            print(
                f"  {name}: total {final.total:.4f}, "
                f"sentence agreement {final.sentence_agreement:.2f}, "
                f"passage agreement {final.passage_agreement:.2f}"
            )
        return 0

    result = train_toy(corpus, cfg)
    _write_csv(f"{args.out}.metrics.csv", _config_json("train-toy", options), history_csv_lines(result.history))
    save_encoder(result.encoder, result.vocab, f"{args.out}.agtc")
    _write_sidecar(args.out, "train-toy", options)
    final = result.history[-1]
    print(
        f"trained {cfg.epochs} epochs ({mode.value}) -> {args.out}.metrics.csv, {args.out}.agtc\n"
        f"  final: total {final.total:.4f}, sentence agreement {final.sentence_agreement:.2f}, "
        f"passage agreement {final.passage_agreement:.2f}"
    )
    return 0


# ---------------------------------------------------------------------------
# cite


def _isolated_lookup(path: str | Path) -> dict[str, QueryEncoding]:
    records, manifest = read_index(path)
    if manifest.kind is not IndexKind.QUERIES:
        raise DataError(f"--isolated must point to a query index, got {path}")
    return {rec.id: rec for rec in records if rec.marker is Marker.SENTENCE}


def _isolated_for_answer(answer, lookup):
    per_sentence = []
    for j, sentence in enumerate(answer.sentences):
        rows = []
        for k in range(len(sentence.propositions)):
            key = f"{sentence_encoding_id(answer.query_id, j)}#p{k}"
            if key not in lookup:
                raise DataError(f"missing isolated encoding '{key}'")
            rows.append(lookup[key].embeddings)
        per_sentence.append(rows)
    return per_sentence


def cmd_cite(args) -> int:
    answers = load_generated_answers(args.answers, args.encodings)
    contexts, ctx_manifest = read_index(args.contexts)
    if ctx_manifest.kind is not IndexKind.PASSAGES:
        raise DataError(f"--contexts must point to a passages index, got {args.contexts}")
    variant = CitationVariant(args.variant)
    cfg = RankingConfig(citation_margin=args.margin)
    lookup = _isolated_lookup(args.isolated) if variant is CitationVariant.PROP_ISOLATED else None

    results = []
    for answer in answers:
        isolated = _isolated_for_answer(answer, lookup) if lookup is not None else None
        results.append(cite_answer(answer, contexts, variant, cfg, isolated_encodings=isolated))
    save_citations(results, args.out)
    _write_sidecar(
        args.out,
        "cite",
        {
            "answers": args.answers,
            "encodings": args.encodings,
            "contexts": args.contexts,
            "variant": variant.value,
            "margin": args.margin,
            "isolated": args.isolated,
            "out": args.out,
        },
    )
    n_sentences = sum(len(r.sentences) for r in results)
    n_flagged = sum(1 for r in results for s in r.sentences if s.no_propositions)
    print(
        f"cited {len(results)} answers ({n_sentences} sentences, "
        f"{n_flagged} without propositions) -> {args.out}"
    )
    return 0


# ---------------------------------------------------------------------------
# eval


def _unit_text(label: str, passage_id: str, texts: dict[str, dict]) -> str:
    if passage_id not in texts:
        raise DataError(f"no texts entry for passage '{passage_id}'")
    entry = texts[passage_id]
    if label == "passage":
        text = entry.get("text") or " ".join(entry.get("sentences", []))
        if not text:
            raise DataError(f"no text for passage '{passage_id}'")
        return text
    kind, _, idx_str = label.partition(":")
    try:
        idx = int(idx_str)
    except ValueError:
        raise DataError(f"bad unit label {label!r}")
    key = {"sentence": "sentences", "proposition": "propositions"}.get(kind)
    if key is None:
        raise DataError(f"bad unit label {label!r}")
    units = entry.get(key, [])
    if not (0 <= idx < len(units)):
        raise DataError(f"no {kind} {idx} in texts for passage '{passage_id}'")
    return units[idx]


def _eval_rankings(args) -> list[tuple[str, object]]:
    rows = [r for r in _read_jsonl(args.rankings) if "rank" in r]
    if not rows:
        raise DataError(f"no ranking records in {args.rankings}")
    texts = {_field(t, "id", args.texts): t for t in _read_jsonl(args.texts)}
    per_query: dict[str, list[tuple[int, str]]] = {}
    for r in rows:
        where = args.rankings
        qid = _field(r, "query_id", where)
        label = _field(r, "unit", where)
        pid = _field(r, "passage_id", where)
        per_query.setdefault(qid, []).append((int(_field(r, "rank", where)), _unit_text(label, pid, texts)))
    ranked_texts = {
        qid: [text for _, text in sorted(pairs, key=lambda p: p[0])]
        for qid, pairs in per_query.items()
    }
    try:
        qrel_lines = Path(args.qrels).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {args.qrels}: {exc}")
    qrels = parse_qrels(qrel_lines)
    return [
        ("p_at_1", precision_at_1(ranked_texts, qrels)),
        ("r_at_5", recall_at_5(ranked_texts, qrels)),
    ]


def _eval_citations(args) -> list[tuple[str, object]]:
    sentences = []
    for r in _read_jsonl(args.citations):
        for s in _field(r, "sentences", args.citations):
            sentences.append(
                CitedSentence(
                    text=_field(s, "text", args.citations),
                    cited=tuple(int(c) for c in _field(s, "cited", args.citations)),
                )
            )
    context_texts = []
    for t in _read_jsonl(args.texts):
        text = t.get("text") or " ".join(t.get("sentences", []))
        if not text:
            raise DataError(f"no text for context '{t.get('id')}'")
        context_texts.append(text)
    report = citation_scores(sentences, context_texts, SubstringOracle())
    return [
        ("citation_precision", report.precision),
        ("citation_recall", report.recall),
        ("precision_defined", report.precision_defined),
    ]


def _metric_cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    return repr(float(value))


def cmd_eval(args) -> int:
    rows = _eval_rankings(args) if args.rankings else _eval_citations(args)
    options = {
        "rankings": args.rankings,
        "citations": args.citations,
        "qrels": args.qrels,
        "texts": args.texts,
        "report": args.report,
    }
    csv_rows = ["metric,value"] + [f"{name},{_metric_cell(value)}" for name, value in rows]
    _write_csv(args.report, _config_json("eval", options), csv_rows)
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        shown = str(value).lower() if isinstance(value, bool) else f"{float(value):.4f}"
        print(f"{name:<{width}}  {shown}")
    print(f"report -> {args.report}")
    return 0


# ---------------------------------------------------------------------------
# make-corpus


def cmd_make_corpus(args) -> int:
    corpus = make_synthetic_corpus(
        n_queries=args.queries,
        n_passages=args.passages,
        n_sentences=args.sentences,
        seed=args.seed,
    )
    save_corpus(corpus, f"{args.out}.corpus.jsonl")
    passage_lines, text_lines, query_lines, qrel_lines = [], [], [], []
    for ex in corpus:
        query_lines.append(_dump({"id": ex.query_id, "tokens": list(ex.query)}))
        qrel_lines.append(f"{ex.query_id}\t{ex.answer}")
        for p in ex.passages:
            passage_lines.append(
                _dump({"id": p.id, "sentences": [list(s) for s in p.sentences]})
            )
            text_lines.append(
                _dump(
                    {
                        "id": p.id,
                        "text": p.text(),
                        "sentences": [p.sentence_text(j) for j in range(len(p.sentences))],
                    }
                )
            )
    for name, lines in (
        ("passages.jsonl", passage_lines),
        ("texts.jsonl", text_lines),
        ("queries.jsonl", query_lines),
        ("qrels.tsv", qrel_lines),
    ):
        Path(f"{args.out}.{name}").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
    _write_sidecar(
        args.out,
        "make-corpus",
        {
            "queries": args.queries,
            "passages": args.passages,
            "sentences": args.sentences,
            "seed": args.seed,
            "out": args.out,
        },
    )
    print(
        f"synthesized {len(corpus)} queries x {args.passages} passages -> "
        f"{args.out}.corpus.jsonl (+ passages/queries/texts/qrels)"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _nonnegative_int(raw: str) -> int:
    value = int(raw)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {raw!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granurank",
        description="Multi-granularity late-interaction ranking over file-based indexes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="encode or re-pack passages/queries into an index")
    what = p_index.add_mutually_exclusive_group(required=True)
    what.add_argument("--passages", help="passages JSONL: id, sentences (token lists), propositions?")
    what.add_argument("--queries", help="queries JSONL: id, tokens")
    source = p_index.add_mutually_exclusive_group(required=True)
    source.add_argument("--toy-encoder", help="toy encoder checkpoint (.agtc) to encode with")
    source.add_argument("--embeddings", help="existing index (.agrv) to take rows from")
    p_index.add_argument("--out", required=True, help="output prefix (writes <out>.agrv)")
    p_index.set_defaults(func=cmd_index)

    p_rank = sub.add_parser("rank", help="rank units of an index against queries")
    p_rank.add_argument("--index", required=True, help="passages index (.agrv)")
    p_rank.add_argument("--queries", required=True, help="query index (.agrv, both marker variants)")
    p_rank.add_argument("--level", choices=LEVELS, default="passage")
    p_rank.add_argument("--alpha", type=float, default=1.0, help="passage-score weight at sentence level")
    p_rank.add_argument("--top-k", type=_nonnegative_int, default=10)
    p_rank.add_argument("--breakdown", action="store_true", help="append per-token heatmap records")
    p_rank.add_argument("--out", required=True, help="output JSONL path")
    p_rank.set_defaults(func=cmd_rank)

    p_train = sub.add_parser("train-toy", help="train the toy encoder on a synthetic corpus")
    p_train.add_argument("--corpus", required=True, help="corpus JSONL (see make-corpus)")
    p_train.add_argument("--mode", choices=[m.value for m in TrainingMode], default=TrainingMode.MULTI_GRANULAR.value)
    p_train.add_argument("--marker-mode", choices=sorted(MARKER_MODES), default=None)
    p_train.add_argument("--epochs", type=_nonnegative_int, default=120)
    p_train.add_argument("--lr", type=float, default=0.5)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--ablation", action="store_true", help="run every marker mode and emit the paired CSV")
    p_train.add_argument("--out", required=True, help="output prefix (.metrics.csv, .agtc)")
    p_train.set_defaults(func=cmd_train_toy)

    p_cite = sub.add_parser("cite", help="attach context citations to generated answers")
    p_cite.add_argument("--answers", required=True, help="answers JSONL (sentences with proposition token sets)")
    p_cite.add_argument("--encodings", required=True, help="sentence encodings index (.agrv, ids '<query>#<j>')")
    p_cite.add_argument("--contexts", required=True, help="context passages index (.agrv)")
    p_cite.add_argument("--variant", choices=[v.value for v in CitationVariant], default=CitationVariant.PROPOSITIONS.value)
    p_cite.add_argument("--margin", type=float, default=1.0)
    p_cite.add_argument("--isolated", help="isolated proposition encodings (.agrv, ids '<query>#<j>#p<k>')")
    p_cite.add_argument("--out", required=True, help="output JSONL path")
    p_cite.set_defaults(func=cmd_cite)

    p_eval = sub.add_parser("eval", help="score rankings or citations against references")
    which = p_eval.add_mutually_exclusive_group(required=True)
    which.add_argument("--rankings", help="ranked JSONL from the rank command")
    which.add_argument("--citations", help="cited JSONL from the cite command")
    p_eval.add_argument("--qrels", help="TSV of query_id <TAB> answer1|answer2|...")
    p_eval.add_argument("--texts", required=True, help="texts JSONL: id, text, sentences?, propositions?")
    p_eval.add_argument("--report", required=True, help="output CSV path")
    p_eval.set_defaults(func=cmd_eval)

    p_corpus = sub.add_parser("make-corpus", help="synthesize a lexical-distractor training corpus")
    p_corpus.add_argument("--queries", type=int, default=50)
    p_corpus.add_argument("--passages", type=int, default=8)
    p_corpus.add_argument("--sentences", type=int, default=4)
    p_corpus.add_argument("--seed", type=int, default=0)
    p_corpus.add_argument("--out", required=True, help="output prefix")
    p_corpus.set_defaults(func=cmd_make_corpus)

    return parser


def _check_usage(parser: argparse.ArgumentParser, args) -> None:
    if args.command == "eval" and args.rankings and not args.qrels:
        parser.error("--rankings needs --qrels")
    if args.command == "cite" and args.variant == CitationVariant.PROP_ISOLATED.value and not args.isolated:
        parser.error(f"--variant {args.variant} needs --isolated")
    if args.command == "train-toy" and args.ablation and args.marker_mode:
        parser.error("--ablation runs every marker mode; drop --marker-mode")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_usage(parser, args)
    try:
        return args.func(args)
    except (DataError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
