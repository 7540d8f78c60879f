"""The full referenced-QA loop: retrieve a 10-abstract context, render the
prompt, generate an answer with the deterministic stub client, and audit
every citation against the context.
"""

import tempfile
from pathlib import Path

from refmed.config import EngineConfig
from refmed.engine import Engine
from refmed.persist import build_all
from refmed.ragchain import TEMPLATES, render_prompt
from refmed.synthetic import hybrid_fixture

docs, queries = hybrid_fixture(seed=4, n_docs=200, n_queries=20)
root = Path(tempfile.mkdtemp(prefix="refmed-demo-"))
corpus = root / "corpus.jsonl"
corpus.write_text("\n".join(d.to_json() for d in docs) + "\n", encoding="utf-8")
config = EngineConfig(corpus_path=str(corpus), index_dir=str(root / "index"))
build_all(config)

with Engine.open(config) as engine:
    question = queries[0].text
    bundle = engine.context_bundle(question)
    print(f"question: {question}")
    print(f"context:  {len(bundle.abstracts)} abstracts, pmids "
          f"{bundle.pmids[:3]} ...\n")

    prompt = render_prompt(TEMPLATES["zero_shot"], bundle)
    head = prompt.splitlines()[0]
    print(f"prompt opens with: {head[:90]}...")
    print(f"prompt length: {len(prompt)} chars, "
          f"{prompt.count('abstract_id:')} serialized abstracts\n")

    answer, audit, bundle, fused = engine.answer(question)
    print("answer:")
    print(f"  {answer.text}\n")
    print(f"citations: {[span.pmid for span in answer.citations]}")
    print(f"valid:        {sorted(audit.valid)}")
    print(f"hallucinated: {[h.pmid for h in audit.hallucinated]}")
    print(f"no_references: {audit.no_references}")
    print(f"truncated:     {answer.truncated}")

    # Corrupt one cited digit and watch the audit flag it.
    if answer.citations:
        span = answer.citations[0]
        bad_id = span.pmid[:-1] + ("0" if span.pmid[-1] != "0" else "1")
        corrupted = answer.text.replace(f"PUBMED:{span.pmid}", f"PUBMED:{bad_id}", 1)
        from refmed.citations import audit_answer

        bad_audit = audit_answer(
            corrupted, set(bundle.pmids), question,
            {a.pmid: a.title for a in bundle.abstracts},
        )
        flagged = bad_audit.hallucinated[0]
        print(f"\nafter corrupting one digit: {flagged.pmid} flagged, "
              f"nearest context pmid {flagged.nearest_context_pmid} "
              f"at digit distance {flagged.digit_distance}")
