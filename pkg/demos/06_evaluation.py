"""The evaluation harness: the retrieval comparison table (semantic with
and without rescore, the hybrid weight sweep, lexical with and without
stopword removal) and answer-reference statistics.
"""

import tempfile
from pathlib import Path

from refmed.config import EngineConfig
from refmed.engine import Engine
from refmed.evalharness import (
    ContextRecord,
    QrelEntry,
    Qrels,
    RelevanceLabels,
    answer_eval,
    default_config_table,
    ir_table_to_markdown,
    run_ir_eval,
)
from refmed.persist import build_all
from refmed.synthetic import hybrid_fixture

docs, queries = hybrid_fixture(seed=13, n_docs=500, n_queries=40)
root = Path(tempfile.mkdtemp(prefix="refmed-demo-"))
corpus = root / "corpus.jsonl"
corpus.write_text("\n".join(d.to_json() for d in docs) + "\n", encoding="utf-8")
config = EngineConfig(corpus_path=str(corpus), index_dir=str(root / "index"))
build_all(config)

qrels = Qrels(tuple(QrelEntry(q.question_id, q.text, q.gold_pmids) for q in queries))

with Engine.open(config) as engine:
    table = run_ir_eval(engine.ranked_pmids, qrels, default_config_table())
    print(ir_table_to_markdown(table))

    # Answer statistics over stub-generated answers with synthetic labels:
    # gold documents are labeled relevant, everything else irrelevant.
    contexts, labels, answers = {}, {}, []
    for q in queries[:10]:
        answer, audit, bundle, _ = engine.answer(q.text)
        contexts[q.question_id] = ContextRecord(
            q.question_id,
            abstracts=tuple((a.pmid, a.title) for a in bundle.abstracts),
            question=q.text,
        )
        labels[q.question_id] = {
            a.pmid: "relevant" if a.pmid in q.gold_pmids else "partially_irrelevant"
            for a in bundle.abstracts
        }
        answers.append((q.question_id, answer))

    report = answer_eval(answers, contexts, RelevanceLabels(labels))
    print("answer statistics over 10 stub answers:")
    print(f"  histogram (N references -> answers): "
          f"{dict((n, c) for n, c in enumerate(report.reference_histogram) if c)}")
    print(f"  total references: {report.total_references}")
    print(f"  avg per answer:   {report.avg_references:.2f}")
    print(f"  reference recall: {report.reference_recall:.2f}")
    print(f"  hallucinated ids: {report.hallucination_count}")
