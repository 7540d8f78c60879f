"""Hybrid fusion: min-max normalization per leg, weighted combination,
and the endpoint reductions to pure lexical or semantic ranking.

Builds both indices over the planted-gold fixture and sweeps the weights.
"""

import tempfile
from pathlib import Path

from refmed.config import EngineConfig
from refmed.engine import Engine
from refmed.hybrid import HybridWeights, aggregate_chunks
from refmed.persist import build_all
from refmed.synthetic import hybrid_fixture

docs, queries = hybrid_fixture(seed=3, n_docs=300, n_queries=30)
root = Path(tempfile.mkdtemp(prefix="refmed-demo-"))
corpus = root / "corpus.jsonl"
corpus.write_text("\n".join(d.to_json() for d in docs) + "\n", encoding="utf-8")
config = EngineConfig(corpus_path=str(corpus), index_dir=str(root / "index"))
manifest = build_all(config)
print(f"built {manifest.document_count} docs / {manifest.chunk_count} chunks "
      f"into {config.index_dir}\n")

with Engine.open(config) as engine:
    query = queries[1].text
    gold = queries[1].gold_pmids
    print(f"query: {query}")
    print(f"gold:  {sorted(gold)}\n")

    for w_lex, w_sem in ((1.0, 0.0), (0.7, 0.3), (0.3, 0.7), (0.0, 1.0)):
        hits = engine.search(query, k=10, weights=HybridWeights(w_lex, w_sem))
        found = sum(1 for h in hits if h.doc_pmid in gold)
        top = ", ".join(
            f"{h.doc_pmid}{'*' if h.doc_pmid in gold else ''}" for h in hits[:5]
        )
        print(f"  weights ({w_lex:.1f}, {w_sem:.1f}): gold in top-10 = {found}/5   "
              f"top-5: {top}")

    print("\nendpoint reductions (argsort equality):")
    pure_lex = [h.doc_pmid for h in aggregate_chunks(engine.lexical_hits(query))[:10]]
    fused_lex = [
        h.doc_pmid for h in engine.search(query, k=10, weights=HybridWeights(1.0, 0.0))
    ]
    pure_sem = [h.doc_pmid for h in aggregate_chunks(engine.semantic_hits(query))[:10]]
    fused_sem = [
        h.doc_pmid for h in engine.search(query, k=10, weights=HybridWeights(0.0, 1.0))
    ]
    print(f"  (1,0) == lexical ranking:  {fused_lex == pure_lex}")
    print(f"  (0,1) == semantic ranking: {fused_sem == pure_sem}")

    print("\nconcurrent and sequential legs produce identical output:",
          engine.search(query, k=10, concurrent=True)
          == engine.search(query, k=10, concurrent=False))
