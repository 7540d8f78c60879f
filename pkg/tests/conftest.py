import json
from pathlib import Path

import pytest

from refmed.config import EngineConfig
from refmed.persist import build_all
from refmed.synthetic import hybrid_fixture

FIXTURES = Path(__file__).parent / "fixtures"


def write_corpus(path: Path, docs) -> Path:
    path.write_text("\n".join(d.to_json() for d in docs) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def small_corpus_docs():
    docs, _ = hybrid_fixture(seed=40, n_docs=120, n_queries=10)
    return docs


@pytest.fixture(scope="session")
def built_index(tmp_path_factory, small_corpus_docs):
    """A committed index over a small corpus, shared read-only by tests."""
    root = tmp_path_factory.mktemp("engine")
    corpus = write_corpus(root / "corpus.jsonl", small_corpus_docs)
    config = EngineConfig(
        corpus_path=str(corpus), index_dir=str(root / "index"), context_size=10
    )
    manifest = build_all(config)
    return config, manifest


def load_jsonl(name: str) -> list[dict]:
    return [
        json.loads(line)
        for line in (FIXTURES / name).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


@pytest.fixture(scope="session")
def appendix_answers() -> list[dict]:
    return load_jsonl("appendix_answers.jsonl")


@pytest.fixture(scope="session")
def appendix_context() -> dict:
    return load_jsonl("appendix_context.jsonl")[0]
