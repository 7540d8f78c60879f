"""Prepare a stub-backed service workspace for the console smoke tests.

Builds a small synthetic corpus and its indices, records replay answers
for two questions (one citing only context ids, one with a corrupted id),
writes the service config, and prints a JSON description to stdout.

Usage: python3 setup_service.py <workdir>
"""

import json
import sys
from pathlib import Path

import yaml

from refmed.config import EngineConfig
from refmed.engine import Engine
from refmed.hybrid import HybridWeights
from refmed.persist import build_all
from refmed.synthetic import hybrid_fixture


def corrupt(pmid: str, taken: set[str]) -> str:
    for pos in range(len(pmid) - 1, -1, -1):
        for delta in range(1, 10):
            digits = list(pmid)
            digits[pos] = str((int(digits[pos]) + delta) % 10)
            candidate = "".join(digits)
            if candidate[0] != "0" and candidate not in taken:
                return candidate
    raise RuntimeError("could not corrupt pmid")


def main() -> None:
    root = Path(sys.argv[1])
    root.mkdir(parents=True, exist_ok=True)
    docs, queries = hybrid_fixture(seed=90, n_docs=200, n_queries=16)
    corpus = root / "corpus.jsonl"
    corpus.write_text("\n".join(d.to_json() for d in docs) + "\n", encoding="utf-8")
    config = EngineConfig(corpus_path=str(corpus), index_dir=str(root / "index"))
    build_all(config)

    with Engine.open(config) as engine:
        # A question whose pure-lexical and pure-semantic contexts differ,
        # so moving the weight sliders visibly changes the panel.
        chosen = None
        for q in queries:
            lex = [h.doc_pmid for h in engine.search(q.text, 10, weights=HybridWeights(1.0, 0.0))]
            sem = [h.doc_pmid for h in engine.search(q.text, 10, weights=HybridWeights(0.0, 1.0))]
            if lex != sem:
                chosen = q
                break
        assert chosen is not None
        clean_context = [h.doc_pmid for h in engine.search(chosen.text, 10)]

        bad_q = next(q for q in queries if q.question_id != chosen.question_id)
        bad_context = [h.doc_pmid for h in engine.search(bad_q.text, 10)]

    clean_cites = clean_context[:3]
    clean_answer = (
        f"The first study reports a clear effect (PUBMED:{clean_cites[0]}). "
        f"A second cohort broadly agrees (PUBMED:{clean_cites[1]}). "
        f"A third analysis adds caveats (PUBMED:{clean_cites[2]})."
    )
    hallucinated = corrupt(bad_context[0], set(bad_context))
    bad_answer = (
        f"One abstract supports the claim (PUBMED:{bad_context[0]}). "
        f"Another supposed source does not exist in the context (PUBMED:{hallucinated})."
    )

    replay = root / "replay.jsonl"
    replay.write_text(
        json.dumps({"question": chosen.text, "text": clean_answer})
        + "\n"
        + json.dumps({"question": bad_q.text, "text": bad_answer})
        + "\n",
        encoding="utf-8",
    )

    config_path = root / "config.yaml"
    config_path.write_text(
        yaml.safe_dump(
            {
                "corpus": str(corpus),
                "index_dir": str(root / "index"),
                "llm": {"kind": "replay", "replay_path": str(replay)},
            }
        ),
        encoding="utf-8",
    )

    print(
        json.dumps(
            {
                "config": str(config_path),
                "clean_question": chosen.text,
                "clean_citations": clean_cites,
                "bad_question": bad_q.text,
                "bad_valid": bad_context[0],
                "bad_hallucinated": hallucinated,
            }
        )
    )


if __name__ == "__main__":
    main()
