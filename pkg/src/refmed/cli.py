"""The refmed command line: ingest, index build, search, answer, audit,
eval ir, eval answers, serve."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .citations import audit_answer
from .config import EngineConfig, load_config
from .corpus import chunk_corpus, ingest_corpus
from .engine import Engine
from .evalharness import (
    ContextRecord,
    Qrels,
    RelevanceLabels,
    RetrievalConfig,
    answer_eval,
    default_config_table,
    ir_table_to_json,
    ir_table_to_markdown,
    run_ir_eval,
)
from .hybrid import HybridWeights
from .lexical import MetadataFilter
from .persist import build_all
from .ragchain import ReferencedAnswer
from .citations import extract_citations


def _load_engine_config(args: argparse.Namespace) -> EngineConfig:
    if getattr(args, "config", None):
        config = load_config(args.config)
    else:
        config = EngineConfig()
    if getattr(args, "corpus", None):
        config = replace(config, corpus_path=args.corpus)
    if getattr(args, "index_dir", None):
        config = replace(config, index_dir=args.index_dir)
    return config


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_engine_config(args)
    with open(config.require_corpus(), "r", encoding="utf-8") as fh:
        docs, stats = ingest_corpus(fh, config.tokenizer, on_malformed=args.on_malformed)
        for _ in chunk_corpus(docs, config.tokenizer, stats=stats):
            pass
    stats.validate()
    payload = json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.stats_out:
        Path(args.stats_out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return 0


def cmd_index_build(args: argparse.Namespace) -> int:
    config = _load_engine_config(args)
    manifest = build_all(config)
    print(
        f"built index in {config.index_dir}: {manifest.document_count} documents, "
        f"{manifest.chunk_count} chunks"
    )
    return 0


def _parse_weights(args: argparse.Namespace, config: EngineConfig) -> HybridWeights:
    w_lex = config.weights.w_lex if args.w_lex is None else args.w_lex
    w_sem = config.weights.w_sem if args.w_sem is None else args.w_sem
    return HybridWeights(w_lex=w_lex, w_sem=w_sem)


def cmd_search(args: argparse.Namespace) -> int:
    config = _load_engine_config(args)
    weights = _parse_weights(args, config)
    if args.mode == "lexical":
        weights = HybridWeights(w_lex=1.0, w_sem=0.0)
    elif args.mode == "semantic":
        weights = HybridWeights(w_lex=0.0, w_sem=1.0)
    flt = MetadataFilter(
        journal=args.journal,
        author=args.author,
        date_from=getattr(args, "from"),
        date_to=args.to,
    )
    with Engine.open(config) as engine:
        hits = engine.search(args.query, args.k, weights=weights, flt=flt)
        for hit in hits:
            sys.stdout.write(
                json.dumps(
                    {
                        "doc_pmid": hit.doc_pmid,
                        "norm_lex": hit.norm_lex,
                        "norm_sem": hit.norm_sem,
                        "fused": hit.fused,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    return 0


def cmd_answer(args: argparse.Namespace) -> int:
    config = _load_engine_config(args)
    weights = _parse_weights(args, config)
    with Engine.open(config) as engine:
        answer, audit, bundle, fused = engine.answer(args.query, args.k, weights=weights)
        sys.stdout.write(
            json.dumps(
                {
                    "question": args.query,
                    "answer": answer.text,
                    "truncated": answer.truncated,
                    "citations": [
                        {"pmid": s.pmid, "start": s.start, "end": s.end}
                        for s in answer.citations
                    ],
                    "audit": audit.to_dict(),
                    "context": [
                        {"pmid": h.doc_pmid, "fused": h.fused} for h in fused
                    ],
                },
                sort_keys=True,
                ensure_ascii=False,
            )
            + "\n"
        )
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    contexts: dict[str, dict] = {}
    for line in Path(args.contexts).read_text(encoding="utf-8").splitlines():
        if line.strip():
            raw = json.loads(line)
            contexts[str(raw["question_id"])] = raw
    reports = []
    for line in Path(args.answers).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        qid = str(raw["question_id"])
        context = contexts.get(qid)
        if context is None:
            raise SystemExit(f"answers reference unknown question_id {qid}")
        abstracts = context["abstracts"]
        audit = audit_answer(
            raw["text"],
            {a["pmid"] for a in abstracts},
            context.get("question", ""),
            {a["pmid"]: a.get("title", "") for a in abstracts},
        )
        reports.append(
            {"question_id": qid, "model": raw.get("model"), "audit": audit.to_dict()}
        )
    payload = json.dumps(reports, indent=2, sort_keys=True) + "\n"
    Path(args.report).write_text(payload, encoding="utf-8")
    print(f"audited {len(reports)} answers -> {args.report}")
    return 0


def cmd_eval_ir(args: argparse.Namespace) -> int:
    config = _load_engine_config(args)
    qrels = Qrels.from_jsonl(args.qrels)
    if args.configs:
        rows = []
        for raw in json.loads(Path(args.configs).read_text(encoding="utf-8")):
            weights = raw.get("weights") or {}
            rows.append(
                RetrievalConfig(
                    name=raw["name"],
                    mode=raw["mode"],
                    rescore=raw.get("rescore", True),
                    remove_stopwords=raw.get("remove_stopwords", True),
                    weights=HybridWeights(
                        w_lex=weights.get("w_lex", 0.7), w_sem=weights.get("w_sem", 0.3)
                    ),
                )
            )
    else:
        rows = default_config_table()
    with Engine.open(config) as engine:
        table = run_ir_eval(
            engine.ranked_pmids, qrels, rows, corpus_pmids=set(engine.docs)
        )
    out = Path(args.out)
    if out.suffix == ".md":
        out.write_text(ir_table_to_markdown(table), encoding="utf-8")
    else:
        out.write_text(ir_table_to_json(table), encoding="utf-8")
    print(f"wrote {len(table)} rows -> {out}")
    return 0


def cmd_eval_answers(args: argparse.Namespace) -> int:
    contexts: dict[str, ContextRecord] = {}
    for line in Path(args.contexts).read_text(encoding="utf-8").splitlines():
        if line.strip():
            raw = json.loads(line)
            contexts[str(raw["question_id"])] = ContextRecord(
                question_id=str(raw["question_id"]),
                abstracts=tuple((a["pmid"], a.get("title", "")) for a in raw["abstracts"]),
                question=raw.get("question"),
            )
    answers = []
    for line in Path(args.answers).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        text = raw["text"]
        answers.append(
            (
                str(raw["question_id"]),
                ReferencedAnswer(
                    text=text, citations=tuple(extract_citations(text)), truncated=False
                ),
            )
        )
    labels = RelevanceLabels.from_jsonl(args.labels)
    report = answer_eval(answers, contexts, labels, count_mode=args.count_mode)
    Path(args.out).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"evaluated {len(answers)} answers -> {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _load_engine_config(args)
    if args.bind:
        config = replace(config, bind=args.bind)
    engine = Engine.open(config)
    ui_dir = Path(args.ui_dir) if args.ui_dir else None
    app = create_app(lambda: engine, ui_dir=ui_dir)
    host, _, port = config.bind.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
    finally:
        engine.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refmed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_engine_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="engine config YAML")
        p.add_argument("--corpus", help="corpus JSONL path (overrides config)")
        p.add_argument("--index-dir", help="index directory (overrides config)")

    p = sub.add_parser("ingest", help="validate a corpus and report stats")
    add_engine_args(p)
    p.add_argument("--stats-out", help="write stats JSON here instead of stdout")
    p.add_argument("--on-malformed", choices=["abort", "skip"], default="abort")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="index lifecycle")
    index_sub = p.add_subparsers(dest="index_command", required=True)
    for name in ("build", "build-lexical", "build-semantic"):
        b = index_sub.add_parser(name, help="build indices from the corpus")
        add_engine_args(b)
        b.set_defaults(func=cmd_index_build)

    p = sub.add_parser("search", help="query the hybrid index")
    add_engine_args(p)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--w-lex", type=float, default=None)
    p.add_argument("--w-sem", type=float, default=None)
    p.add_argument("--mode", choices=["hybrid", "lexical", "semantic"], default="hybrid")
    p.add_argument("--journal")
    p.add_argument("--author")
    p.add_argument("--from", dest="from")
    p.add_argument("--to")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("answer", help="generate a referenced answer")
    add_engine_args(p)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--w-lex", type=float, default=None)
    p.add_argument("--w-sem", type=float, default=None)
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("audit", help="audit answer files against context files")
    p.add_argument("--answers", required=True)
    p.add_argument("--contexts", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("eval", help="evaluation harness")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)

    e = eval_sub.add_parser("ir", help="retrieval metrics table")
    add_engine_args(e)
    e.add_argument("--qrels", required=True)
    e.add_argument("--configs", help="JSON list of retrieval configs")
    e.add_argument("--out", required=True, help="output path (.json or .md)")
    e.set_defaults(func=cmd_eval_ir)

    e = eval_sub.add_parser("answers", help="answer reference statistics")
    e.add_argument("--answers", required=True)
    e.add_argument("--contexts", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--count-mode", choices=["distinct", "occurrences"], default="distinct")
    e.set_defaults(func=cmd_eval_answers)

    p = sub.add_parser("serve", help="run the HTTP service")
    add_engine_args(p)
    p.add_argument("--bind", help="host:port (overrides config)")
    p.add_argument("--ui-dir", help="static webui directory to mount at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
