"""Deterministic synthetic corpora and query sets.

Everything here is generated from a seeded RNG, so fixtures are
reproducible without shipping data blobs. The hybrid fixture plants gold
documents for 100 mixed queries inside a 1,000-document corpus:

- exact-term queries carry a rare marker token that only their gold
  documents contain, so precise term matching shines;
- paraphrase queries share common topic tokens with their gold documents
  and face short, term-repeating bait documents that pull on one channel
  harder than the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document

_JOURNALS = (
    "J Clin Invest",
    "Lancet",
    "BMJ",
    "Nat Med",
    "Cell Rep",
    "PLoS One",
)

_AUTHORS = (
    "Alvarez R",
    "Chen L",
    "Dimitrov P",
    "Eriksson M",
    "Fontana G",
    "Gupta S",
    "Horvat I",
    "Ivanova K",
)


@dataclass(frozen=True)
class FixtureQuery:
    question_id: str
    text: str
    kind: str  # exact | paraphrase
    gold_pmids: frozenset[str]


def _sentenceize(tokens: list[str], rng: np.random.Generator) -> str:
    """Join tokens into sentence-shaped text so chunking and first-sentence
    extraction behave naturally."""
    sentences = []
    i = 0
    while i < len(tokens):
        length = int(rng.integers(6, 13))
        group = tokens[i : i + length]
        i += length
        if not group:
            break
        sentences.append(group[0].capitalize() + " " + " ".join(group[1:]) + ".")
    return " ".join(sentences) if sentences else tokens[0].capitalize() + "."


def _make_doc(
    pmid: str, title_tokens: list[str], body_tokens: list[str], rng: np.random.Generator
) -> Document:
    return Document(
        pmid=pmid,
        title=" ".join(title_tokens).capitalize(),
        abstract=_sentenceize(body_tokens, rng),
        authors=tuple(rng.choice(_AUTHORS, size=int(rng.integers(1, 4)), replace=False).tolist()),
        journal=str(rng.choice(_JOURNALS)),
        pub_date=f"{int(rng.integers(1990, 2025)):04d}-{int(rng.integers(1, 13)):02d}-"
        f"{int(rng.integers(1, 29)):02d}",
    )


def random_docs(
    n: int,
    seed: int = 0,
    vocab_size: int = 80,
    min_tokens: int = 5,
    max_tokens: int = 60,
    pmid_base: int = 10_000_000,
) -> list[Document]:
    """Random documents over a small vocabulary; term repetition is common,
    which exercises tf saturation."""
    rng = np.random.default_rng(seed)
    vocab = [f"term{i:03d}" for i in range(vocab_size)]
    weights = 1.0 / np.arange(1, vocab_size + 1)  # zipf-ish
    weights /= weights.sum()
    docs = []
    for i in range(n):
        length = int(rng.integers(min_tokens, max_tokens + 1))
        tokens = rng.choice(vocab, size=length, p=weights).tolist()
        docs.append(_make_doc(str(pmid_base + i), tokens[:3], tokens[3:] or tokens, rng))
    return docs


def random_queries(n: int, seed: int = 0, vocab_size: int = 80) -> list[str]:
    rng = np.random.default_rng(seed)
    vocab = [f"term{i:03d}" for i in range(vocab_size)]
    queries = []
    for _ in range(n):
        n_terms = int(rng.integers(1, 5))
        terms = rng.choice(vocab, size=n_terms, replace=False).tolist()
        if rng.random() < 0.15:
            terms.append("unseenword")
        queries.append(" ".join(terms))
    return queries


def hybrid_fixture(
    seed: int = 13, n_docs: int = 1000, n_queries: int = 100
) -> tuple[list[Document], list[FixtureQuery]]:
    """The planted-gold corpus: per query 5 gold documents plus bait and
    confuser documents, topped up with shared background documents."""
    rng = np.random.default_rng(seed)
    background_vocab = [f"bg{i:03d}" for i in range(300)]

    docs: list[Document] = []
    queries: list[FixtureQuery] = []
    next_pmid = 20_000_001

    def take_pmid() -> str:
        nonlocal next_pmid
        pmid = str(next_pmid)
        next_pmid += 1
        return pmid

    def background(n: int) -> list[str]:
        return rng.choice(background_vocab, size=n).tolist()

    all_topics: list[str] = []
    for qi in range(n_queries):
        kind = "exact" if qi % 2 == 0 else "paraphrase"
        topics = [f"q{qi:03d}t{j}" for j in range(6)]
        all_topics.extend(topics)
        rare = f"q{qi:03d}marker"
        gold: list[str] = []

        for g in range(5):
            pmid = take_pmid()
            gold.append(pmid)
            shared = [t for j, t in enumerate(topics) if j != (g % 6)]  # 5 of 6
            body = list(shared)
            if kind == "exact":
                body.append(rare)
            # Two of the gold docs are long, which costs them on cosine
            # concentration and on BM25 length normalization.
            filler = 40 if g >= 3 else int(rng.integers(6, 14))
            body.extend(background(filler))
            body = [body[i] for i in rng.permutation(len(body)).tolist()]
            docs.append(_make_doc(pmid, shared[:3], body, rng))

        # Bait: one topic token repeated in a short document.
        bait_token = topics[int(rng.integers(0, 6))]
        docs.append(_make_doc(take_pmid(), [bait_token], [bait_token] * 6 + background(2), rng))

        # Confusers: three topic tokens, doubled, short.
        for _ in range(3):
            picks = rng.choice(topics, size=3, replace=False).tolist()
            docs.append(_make_doc(take_pmid(), picks, picks * 2 + background(3), rng))

        if kind == "exact":
            text = f"What is the role of {topics[0]} {topics[1]} {topics[2]} in {topics[3]} {topics[4]} {rare}?"
        else:
            text = (
                f"How does {topics[0]} {topics[1]} affect {topics[2]} "
                f"{topics[3]} {topics[4]} {topics[5]}?"
            )
        queries.append(
            FixtureQuery(
                question_id=f"q{qi:03d}",
                text=text,
                kind=kind,
                gold_pmids=frozenset(gold),
            )
        )

    while len(docs) < n_docs:
        body = background(int(rng.integers(20, 45)))
        # Sprinkle a couple of topic tokens into background docs as noise.
        for _ in range(2):
            body.append(all_topics[int(rng.integers(0, len(all_topics)))])
        docs.append(_make_doc(take_pmid(), body[:3], body, rng))

    return docs[:n_docs], queries


def random_unit_vectors(n: int, dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors / norms
