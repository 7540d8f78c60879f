"""Ingestion and chunking: accounting identities, the greedy packing
oracle, and round-trip reconstruction under fuzz."""

import json
from collections import Counter

import numpy as np
import pytest

from refmed.analysis import DEFAULT_TOKENIZER, count_tokens, sentence_segment, tokenize_spans
from refmed.corpus import (
    Chunk,
    CorpusStats,
    Document,
    DuplicatePmidError,
    MalformedRecordError,
    chunk_document,
    ingest_corpus,
)


def record(pmid="123", title="T", abstract="Some abstract text.", **extra):
    return json.dumps({"pmid": pmid, "title": title, "abstract": abstract, **extra})


class TestIngestion:
    def test_whitespace_abstract_skipped(self):
        docs, stats = ingest_corpus([record(abstract="   ")])
        assert list(docs) == []
        assert stats.empty_skipped == 1
        assert stats.total_records == 1

    def test_three_records_one_empty(self):
        lines = [
            record(pmid="1", abstract="Aspirin reduces fever."),
            record(pmid="2", abstract=""),
            record(pmid="3", abstract="Vaccines and immunity."),
        ]
        docs, stats = ingest_corpus(lines)
        assert [d.pmid for d in docs] == ["1", "3"]
        assert (stats.total_records, stats.empty_skipped, stats.indexed_documents) == (3, 1, 2)
        stats.validate()

    def test_full_scale_accounting_identity(self):
        # The identity the stats contract enforces, checked at the reported
        # full-corpus magnitudes without ingesting anything.
        stats = CorpusStats(
            total_records=36_797_469, empty_skipped=11_308_679, indexed_documents=25_488_790
        )
        stats.validate()
        assert stats.total_records - stats.empty_skipped == 25_488_790

    def test_duplicate_pmid_aborts(self):
        lines = [record(pmid="9"), record(pmid="9")]
        docs, _ = ingest_corpus(lines)
        with pytest.raises(DuplicatePmidError):
            list(docs)

    def test_malformed_aborts_with_line_number(self):
        lines = [record(pmid="1"), "{not json"]
        docs, _ = ingest_corpus(lines)
        with pytest.raises(MalformedRecordError) as exc_info:
            list(docs)
        assert exc_info.value.line_no == 2

    def test_malformed_skip_and_count(self):
        lines = [record(pmid="1"), '{"title": "no pmid"}', record(pmid="2")]
        docs, stats = ingest_corpus(lines, on_malformed="skip")
        assert [d.pmid for d in docs] == ["1", "2"]
        assert stats.malformed_skipped == 1
        stats.validate()

    def test_non_digit_pmid_malformed(self):
        docs, _ = ingest_corpus([record(pmid="12a")])
        with pytest.raises(MalformedRecordError):
            list(docs)

    def test_bad_pub_date_malformed(self):
        docs, _ = ingest_corpus([record(pub_date="March 2020")])
        with pytest.raises(MalformedRecordError):
            list(docs)

    def test_mean_tokens_running(self):
        lines = [
            record(pmid="1", title="a b", abstract="c d"),
            record(pmid="2", title="a b c d", abstract="e f g h"),
        ]
        docs, stats = ingest_corpus(lines)
        list(docs)
        assert stats.mean_tokens_per_document == pytest.approx((4 + 8) / 2)

    def test_document_json_round_trip(self):
        doc = Document(
            pmid="42",
            title="A title",
            abstract="An abstract.",
            authors=("Chen L",),
            journal="BMJ",
            pub_date="2021-03-04",
        )
        assert Document.from_json(doc.to_json()) == doc


def greedy_oracle(sentence_tokens: list[int], max_tokens: int) -> list[int]:
    """Brute-force greedy packer over a sentence-length sequence; returns
    chunk token totals."""
    chunks, current = [], 0
    for n in sentence_tokens:
        if current and current + n > max_tokens:
            chunks.append(current)
            current = 0
        current += n
    if current:
        chunks.append(current)
    return chunks


def normalized(text: str) -> str:
    return " ".join(text.split())


class TestChunking:
    def test_under_limit_single_chunk(self):
        doc = Document(pmid="1", title="t", abstract="word " * 50)
        chunks = chunk_document(doc)
        assert len(chunks) == 1 and chunks[0].seq == 0

    def test_forced_split_at_sentence_boundary(self):
        # Sentences of 500 and 100 tokens against a 512 budget: the 600-token
        # field must split exactly at the sentence boundary.
        s1 = " ".join(f"w{i}" for i in range(498)) + " end."
        s2 = "Next " + " ".join(f"v{i}" for i in range(98)) + "."
        doc = Document(pmid="1", title="", abstract=f"{s1} {s2}")
        chunks = chunk_document(doc)
        assert [c.token_count for c in chunks] == [500, 100]

    def test_greedy_example_300_250_150(self):
        # Sentence token counts 300 / 250 / 150: greedy must close the first
        # chunk at 300 because 300+250 exceeds 512, then pack 250+150.
        sentences = []
        for n, word in ((300, "a"), (250, "b"), (150, "c")):
            sentences.append("S " + " ".join(f"{word}{i}" for i in range(n - 3)) + " stop.")
        doc = Document(pmid="1", title="", abstract=" ".join(sentences))
        chunks = chunk_document(doc)
        assert [c.token_count for c in chunks] == [300, 400]
        assert greedy_oracle([300, 250, 150], 512) == [300, 400]

    def test_oversized_sentence_hard_split(self):
        text = " ".join(f"w{i}" for i in range(1300))  # no terminator: one sentence
        doc = Document(pmid="1", title="", abstract=text)
        counters = Counter()
        chunks = chunk_document(doc, counters=counters)
        assert counters["oversized_sentences"] == 1
        assert [c.token_count for c in chunks] == [512, 512, 276]
        assert all(c.token_count <= 512 for c in chunks)

    def test_round_trip_and_oracle_fuzz(self):
        rng = np.random.default_rng(11)
        vocab = [f"tok{i}" for i in range(40)] + ["e.g.", "7.4", "(x)", "p53"]
        for trial in range(300):
            n_sentences = int(rng.integers(1, 12))
            max_tokens = int(rng.integers(8, 64))
            sentences = []
            for _ in range(n_sentences):
                n = int(rng.integers(1, 20))
                words = rng.choice(vocab, size=n).tolist()
                sentences.append(words[0].capitalize() + " " + " ".join(words[1:]) + ".")
            doc = Document(pmid=str(trial + 1), title="Fuzz title", abstract=" ".join(sentences))
            chunks = chunk_document(doc, max_tokens=max_tokens, counters=Counter())
            # Budget respected
            assert all(c.token_count <= max_tokens for c in chunks)
            # Dense seq numbering
            assert [c.seq for c in chunks] == list(range(len(chunks)))
            # No characters ever lost
            joined = " ".join(c.text for c in chunks)
            assert "".join(joined.split()) == "".join(doc.field_text.split())
            field = doc.field_text
            lens = [
                len(tokenize_spans(field[s:e])) for s, e in sentence_segment(field)
            ]
            if max(lens) <= max_tokens:
                # Sentence-aligned regime: exact round trip and greedy oracle.
                assert normalized(joined) == normalized(field)
                assert [c.token_count for c in chunks] == greedy_oracle(lens, max_tokens)

    def test_oversized_reconstruction_up_to_whitespace(self):
        # Hard splits may only ever add whitespace, never lose characters.
        text = " ".join(f"w{i}" for i in range(700))
        doc = Document(pmid="1", title="", abstract=text)
        chunks = chunk_document(doc, counters=Counter())
        joined = " ".join(c.text for c in chunks)
        assert "".join(joined.split()) == "".join(doc.field_text.split())

    def test_determinism(self):
        doc = Document(pmid="5", title="T", abstract="One. Two. Three. " * 30)
        assert chunk_document(doc) == chunk_document(doc)

    def test_token_counts_recounted_per_chunk(self):
        doc = Document(pmid="1", title="t", abstract="A b c. D e f. G h i.")
        for chunk in chunk_document(doc, max_tokens=5):
            assert chunk.token_count == count_tokens(chunk.text, DEFAULT_TOKENIZER)
