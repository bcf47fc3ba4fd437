"""Command-line export pipeline: checkpoint in, engine-readable files out.

Exit codes match the engine CLI: 0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from granurank import DataError, Marker

from .encoder import CheckpointEncoder
from .export import ExportJob, export_passages, export_queries
from .segment import align_proposition

logger = logging.getLogger("granurank_export")

_MARKER_CHOICES = {
    "passage": (Marker.PASSAGE,),
    "sentence": (Marker.SENTENCE,),
    "both": (Marker.PASSAGE, Marker.SENTENCE),
}


def _job(args) -> ExportJob:
    return ExportJob(
        model=args.model,
        input_path=args.input,
        out_prefix=args.out,
        batch_size=args.batch_size,
    )


def cmd_export_passages(args) -> int:
    propositions = None
    if args.propositions:
        propositions = {}
        for lineno, line in enumerate(
            open(args.propositions, encoding="utf-8").read().splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                propositions[str(obj["id"])] = list(obj["propositions"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"bad line {lineno} in {args.propositions}: {exc}")
    report = export_passages(_job(args), propositions=propositions)
    print(
        f"exported {report.written} passages -> {args.out}.agrv "
        f"({len(report.skipped)} skipped)"
    )
    return 0


def cmd_export_queries(args) -> int:
    report = export_queries(_job(args), markers=_MARKER_CHOICES[args.marker])
    print(
        f"exported {report.written} query encodings -> {args.out}.agrv "
        f"({len(report.skipped)} skipped)"
    )
    return 0


def cmd_align_props(args) -> int:
    encoder = CheckpointEncoder(args.model)
    inputs = []
    for lineno, line in enumerate(
        open(args.input, encoding="utf-8").read().splitlines(), start=1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            inputs.append((str(obj["id"]), str(obj["sentence"]), list(obj["propositions"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"bad line {lineno} in {args.input}: {exc}")
    if not inputs:
        raise DataError(f"no records in {args.input}")

    lines = []
    for rec_id, sentence, props in inputs:
        sent_tokens, _ = encoder.token_strings(sentence)
        sent_surface = [t[2:] if t.startswith("##") else t for t in sent_tokens]
        masks = []
        for prop in props:
            prop_tokens, _ = encoder.token_strings(str(prop))
            cleaned = [t[2:] if t.startswith("##") else t for t in prop_tokens]
            matched, dropped = align_proposition(sent_surface, cleaned)
            if dropped:
                logger.warning("'%s': dropped unalignable proposition tokens %s", rec_id, dropped)
            if matched:
                masks.append(matched)
            else:
                logger.warning("'%s': proposition %r aligned to nothing; omitted", rec_id, prop)
        lines.append(json.dumps({"id": rec_id, "masks": masks}, separators=(",", ":")))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("".join(line + "\n" for line in lines))
    print(f"aligned propositions for {len(lines)} sentences -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granurank-export",
        description="Export transformer token embeddings into ranking-engine index files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_pass = sub.add_parser("export-passages", help="encode passages into .agrv + span sidecar")
    p_pass.add_argument("--model", required=True, help="checkpoint path or identifier")
    p_pass.add_argument("--input", required=True, help="JSONL of {id, text}")
    p_pass.add_argument("--propositions", help="optional JSONL of {id, propositions:[{sentence,text}]}")
    p_pass.add_argument("--batch-size", type=int, default=8)
    p_pass.add_argument("--out", required=True, help="output prefix")
    p_pass.set_defaults(func=cmd_export_passages)

    p_query = sub.add_parser("export-queries", help="encode queries under marker variants")
    p_query.add_argument("--model", required=True, help="checkpoint path or identifier")
    p_query.add_argument("--input", required=True, help="JSONL of {id, question} (or {id, text})")
    p_query.add_argument("--marker", choices=sorted(_MARKER_CHOICES), default="both")
    p_query.add_argument("--batch-size", type=int, default=8)
    p_query.add_argument("--out", required=True, help="output prefix")
    p_query.set_defaults(func=cmd_export_queries)

    p_align = sub.add_parser("align-props", help="align proposition strings to sentence tokens")
    p_align.add_argument("--model", required=True, help="checkpoint path (tokenizer only)")
    p_align.add_argument("--input", required=True, help="JSONL of {id, sentence, propositions:[str]}")
    p_align.add_argument("--out", required=True, help="output JSONL path")
    p_align.set_defaults(func=cmd_align_props)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
