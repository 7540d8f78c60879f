"""BM25 inverted index over the title+abstract field with metadata filtering.

score(d, q) = sum over unique query terms t of
    idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
with the lower-bounded IDF variant
    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
which keeps every matched score positive so min-max fusion stays sane.
Query terms are deduplicated and scored in sorted order, which fixes the
floating-point summation order; the naive full-scan oracle uses the same
order, so index and oracle agree bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from io import BytesIO
from typing import Iterable

import numpy as np

from . import codec
from .analysis import analyze, analyze_query
from .corpus import Document
from .hybrid import EmptyQueryError, SearchHit

_MAGIC = b"RMLX"
_VERSION = 1


class EmptyIndexError(RuntimeError):
    """Search against an index with zero documents."""


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass(frozen=True)
class MetadataFilter:
    """Exact-match / range filter over document metadata. Empty matches all."""

    journal: str | None = None
    author: str | None = None
    date_from: str | None = None
    date_to: str | None = None

    def is_empty(self) -> bool:
        return (
            self.journal is None
            and self.author is None
            and self.date_from is None
            and self.date_to is None
        )

    def matches(self, journal: str, authors: tuple[str, ...], pub_date: str | None) -> bool:
        if self.journal is not None and journal != self.journal:
            return False
        if self.author is not None and self.author not in authors:
            return False
        if self.date_from is not None or self.date_to is not None:
            if pub_date is None:
                return False
            if self.date_from is not None and pub_date < self.date_from:
                return False
            if self.date_to is not None and pub_date > self.date_to:
                return False
        return True


@dataclass(frozen=True)
class DocMeta:
    pmid: str
    authors: tuple[str, ...]
    journal: str
    pub_date: str | None


class LexicalIndex:
    """Immutable after build; concurrent searches need no synchronization."""

    def __init__(
        self,
        postings: dict[str, tuple[np.ndarray, np.ndarray]],
        doc_lengths: np.ndarray,
        metadata: list[DocMeta],
        params: BM25Params,
    ):
        self.postings = postings
        self.doc_lengths = doc_lengths.astype(np.float64)
        self.metadata = metadata
        self.params = params
        self.doc_count = len(metadata)
        self.avg_doc_length = float(self.doc_lengths.mean()) if self.doc_count else 0.0
        self._pmid_order = np.array(
            [int(m.pmid) for m in metadata], dtype=np.int64
        ) if metadata else np.zeros(0, dtype=np.int64)

    # -- scoring ------------------------------------------------------------

    def idf(self, term: str) -> float:
        entry = self.postings.get(term)
        df = len(entry[0]) if entry is not None else 0
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def _filter_mask(self, flt: MetadataFilter | None) -> np.ndarray | None:
        if flt is None or flt.is_empty():
            return None
        return np.array(
            [flt.matches(m.journal, m.authors, m.pub_date) for m in self.metadata],
            dtype=bool,
        )

    def score_all(self, query: str, remove_stopwords: bool = False) -> np.ndarray:
        """BM25 scores for every document; zero where no query term occurs."""
        terms = analyze_query(query, remove_stopwords)
        if not terms:
            raise EmptyQueryError(f"query analyzed to zero terms: {query!r}")
        k1, b = self.params.k1, self.params.b
        scores = np.zeros(self.doc_count, dtype=np.float64)
        norm = k1 * (1.0 - b + b * self.doc_lengths / self.avg_doc_length)
        for term in sorted(set(terms)):
            entry = self.postings.get(term)
            if entry is None:
                continue
            ords, tfs = entry
            tf = tfs.astype(np.float64)
            scores[ords] += self.idf(term) * tf * (k1 + 1.0) / (tf + norm[ords])
        return scores

    def search(
        self,
        query: str,
        k: int,
        flt: MetadataFilter | None = None,
        remove_stopwords: bool = False,
    ) -> list[SearchHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if self.doc_count == 0:
            raise EmptyIndexError("lexical index is empty")
        scores = self.score_all(query, remove_stopwords)
        mask = self._filter_mask(flt)
        if mask is not None:
            scores = np.where(mask, scores, 0.0)
        matched = np.nonzero(scores > 0.0)[0]
        if matched.size == 0:
            return []
        order = np.lexsort((self._pmid_order[matched], -scores[matched]))
        top = matched[order[:k]]
        return [
            SearchHit(
                doc_pmid=self.metadata[i].pmid,
                raw_score=float(scores[i]),
                source="lexical",
            )
            for i in top
        ]

    # -- persistence ----------------------------------------------------------

    def to_bytes(self) -> bytes:
        buf = BytesIO()
        buf.write(_MAGIC)
        codec.write_u32(buf, _VERSION)
        codec.write_u64(buf, self.doc_count)
        codec.write_f64(buf, self.avg_doc_length)
        codec.write_f64(buf, self.params.k1)
        codec.write_f64(buf, self.params.b)
        for i, meta in enumerate(self.metadata):
            codec.write_str(buf, meta.pmid)
            codec.write_varint(buf, int(self.doc_lengths[i]))
            codec.write_str(buf, meta.journal)
            codec.write_varint(buf, len(meta.authors))
            for author in meta.authors:
                codec.write_str(buf, author)
            codec.write_str(buf, meta.pub_date or "")
        codec.write_varint(buf, len(self.postings))
        for term in sorted(self.postings):
            ords, tfs = self.postings[term]
            codec.write_str(buf, term)
            codec.write_varint(buf, len(ords))
            prev = -1
            for ordinal, tf in zip(ords.tolist(), tfs.tolist()):
                codec.write_varint(buf, ordinal - prev)  # delta-encoded, gaps >= 1
                codec.write_varint(buf, tf)
                prev = ordinal
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "LexicalIndex":
        buf = BytesIO(data)
        codec.expect_magic(buf, _MAGIC, "lexical index")
        version = codec.read_u32(buf)
        if version != _VERSION:
            raise codec.CodecError(f"unsupported lexical index version {version}")
        doc_count = codec.read_u64(buf)
        codec.read_f64(buf)  # avgdl, recomputed from lengths
        k1 = codec.read_f64(buf)
        b = codec.read_f64(buf)
        metadata: list[DocMeta] = []
        lengths = np.zeros(doc_count, dtype=np.float64)
        for i in range(doc_count):
            pmid = codec.read_str(buf)
            lengths[i] = codec.read_varint(buf)
            journal = codec.read_str(buf)
            n_authors = codec.read_varint(buf)
            authors = tuple(codec.read_str(buf) for _ in range(n_authors))
            pub_date = codec.read_str(buf) or None
            metadata.append(DocMeta(pmid, authors, journal, pub_date))
        postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        n_terms = codec.read_varint(buf)
        for _ in range(n_terms):
            term = codec.read_str(buf)
            df = codec.read_varint(buf)
            ords = np.zeros(df, dtype=np.int64)
            tfs = np.zeros(df, dtype=np.int64)
            prev = -1
            for j in range(df):
                prev += codec.read_varint(buf)
                ords[j] = prev
                tfs[j] = codec.read_varint(buf)
            postings[term] = (ords, tfs)
        return cls(postings, lengths, metadata, BM25Params(k1=k1, b=b))


def build_lexical_index(
    docs: Iterable[Document],
    params: BM25Params = BM25Params(),
) -> LexicalIndex:
    """Index the title+abstract field of each document."""
    postings_acc: dict[str, list[tuple[int, int]]] = {}
    lengths: list[int] = []
    metadata: list[DocMeta] = []
    for ordinal, doc in enumerate(docs):
        terms = analyze(doc.field_text)
        lengths.append(len(terms))
        metadata.append(DocMeta(doc.pmid, doc.authors, doc.journal, doc.pub_date))
        counts: dict[str, int] = {}
        for term in terms:
            counts[term] = counts.get(term, 0) + 1
        for term, tf in counts.items():
            postings_acc.setdefault(term, []).append((ordinal, tf))
    postings = {
        term: (
            np.array([o for o, _ in plist], dtype=np.int64),
            np.array([tf for _, tf in plist], dtype=np.int64),
        )
        for term, plist in postings_acc.items()
    }
    return LexicalIndex(postings, np.array(lengths, dtype=np.float64), metadata, params)


class NaiveBM25Scorer:
    """Full-scan scorer over raw documents: no inverted index, no top-k
    pruning. Kept deliberately independent of LexicalIndex as its test
    oracle. Term frequencies are counted per document from the analyzed
    token lists and scores summed over the same sorted unique query terms,
    so index and oracle agree bit for bit."""

    def __init__(self, docs: list[Document], params: BM25Params = BM25Params()):
        self.docs = list(docs)
        self.params = params
        self.counts = []
        for d in self.docs:
            tokens = analyze(d.field_text)
            per_doc: dict[str, float] = {}
            for t in tokens:
                per_doc[t] = per_doc.get(t, 0.0) + 1.0
            self.counts.append((float(len(tokens)), per_doc))
        n = len(self.docs)
        self.avgdl = sum(dl for dl, _ in self.counts) / n if n else 0.0

    def search(self, query: str, remove_stopwords: bool = False) -> list[tuple[str, float]]:
        terms = analyze_query(query, remove_stopwords)
        if not terms:
            raise EmptyQueryError(f"query analyzed to zero terms: {query!r}")
        unique_terms = sorted(set(terms))
        n = len(self.docs)
        df = {
            t: sum(1 for _, per_doc in self.counts if t in per_doc) for t in unique_terms
        }
        k1, b = self.params.k1, self.params.b
        results = []
        for doc, (dl, per_doc) in zip(self.docs, self.counts):
            score = 0.0
            for t in unique_terms:
                tf = per_doc.get(t, 0.0)
                if tf == 0.0:
                    continue
                idf = math.log(1.0 + (n - df[t] + 0.5) / (df[t] + 0.5))
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avgdl))
            if score > 0.0:
                results.append((doc.pmid, score))
        results.sort(key=lambda r: (-r[1], int(r[0]), r[0]))
        return results


def bm25_full_scan(
    docs: list[Document],
    query: str,
    params: BM25Params = BM25Params(),
    remove_stopwords: bool = False,
) -> list[tuple[str, float]]:
    return NaiveBM25Scorer(docs, params).search(query, remove_stopwords)
