"""The query-side engine: opens a committed index directory and exposes
search, context assembly, and answer generation over it.

All index state is immutable after open; the engine is safe for unlimited
concurrent callers and holds a shared reader lock for its lifetime.
"""

from __future__ import annotations

from pathlib import Path

from . import persist
from .citations import CitationAudit, audit_answer
from .config import EngineConfig
from .corpus import Document
from .evalharness import RetrievalConfig
from .hybrid import (
    FusedHit,
    HybridWeights,
    SearchHit,
    aggregate_chunks,
    hybrid_search,
)
from .lexical import LexicalIndex, MetadataFilter
from .ragchain import (
    AbstractRef,
    AnswerClient,
    ContextBundle,
    ExtractiveStubClient,
    HttpChatClient,
    ReferencedAnswer,
    ReplayClient,
    TEMPLATES,
    build_context,
    generate_answer,
)
from .semantic import SemanticIndex


def make_client(config: EngineConfig) -> AnswerClient:
    if config.llm.kind == "stub":
        return ExtractiveStubClient()
    if config.llm.kind == "replay":
        return ReplayClient.from_jsonl(config.llm.replay_path)
    return HttpChatClient(url=config.llm.url, model=config.llm.model)


class Engine:
    def __init__(
        self,
        config: EngineConfig,
        docs: dict[str, Document],
        lexical: LexicalIndex,
        semantic: SemanticIndex,
        embedder,
        lock: persist.DirLock | None = None,
    ):
        self.config = config
        self.docs = docs
        self.lexical = lexical
        self.semantic = semantic
        self.embedder = embedder
        self.client = make_client(config)
        self._lock = lock

    # -- lifecycle ------------------------------------------------------------

    @classmethod
    def open(cls, config: EngineConfig, mmap_vectors: bool = True) -> "Engine":
        """Verify the manifest and load every component, taking a shared
        reader lock on the index directory."""
        index_dir = Path(config.index_dir)
        lock = persist.DirLock(index_dir, exclusive=False).acquire()
        try:
            manifest = persist.read_manifest(index_dir)
            persist.verify_checksums(index_dir, manifest)
            docs: dict[str, Document] = {}
            for line in (index_dir / persist.DOCS_NAME).read_text(encoding="utf-8").splitlines():
                if line.strip():
                    doc = Document.from_json(line)
                    docs[doc.pmid] = doc
            lexical = LexicalIndex.from_bytes((index_dir / persist.LEXICAL_NAME).read_bytes())
            semantic = SemanticIndex.load(
                index_dir / persist.SEMANTIC_NAME,
                index_dir / persist.VECTORS_NAME,
                mmap_vectors=mmap_vectors,
            )
            if manifest.document_count != len(docs):
                raise persist.IndexCorruptError(
                    f"manifest document_count {manifest.document_count} != {len(docs)}"
                )
            embedder = persist._make_embedder(config)
            return cls(config, docs, lexical, semantic, embedder, lock)
        except BaseException:
            lock.release()
            raise

    def close(self) -> None:
        if self._lock is not None:
            self._lock.release()
            self._lock = None

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- retrieval legs ---------------------------------------------------------

    def lexical_hits(
        self,
        query: str,
        depth: int | None = None,
        flt: MetadataFilter | None = None,
        remove_stopwords: bool | None = None,
    ) -> list[SearchHit]:
        if remove_stopwords is None:
            remove_stopwords = self.config.search.remove_stopwords
        depth = depth or self.config.search.leg_depth
        return self.lexical.search(query, k=depth, flt=flt, remove_stopwords=remove_stopwords)

    def semantic_hits(
        self,
        query: str,
        depth: int | None = None,
        rescore: bool = True,
        flt: MetadataFilter | None = None,
    ) -> list[SearchHit]:
        depth = depth or self.config.search.leg_depth
        vector = self.embedder.embed(query)
        hits = self.semantic.search(vector, k=depth, rescore=rescore, candidates=depth)
        out = []
        for h in hits:
            if flt is not None and not flt.is_empty():
                doc = self.docs[h.doc_pmid]
                if not flt.matches(doc.journal, doc.authors, doc.pub_date):
                    continue
            out.append(
                SearchHit(
                    doc_pmid=h.doc_pmid,
                    raw_score=h.score,
                    source="semantic",
                    chunk_seq=h.chunk_seq,
                )
            )
        return out

    # -- public search ------------------------------------------------------------

    def search(
        self,
        query: str,
        k: int = 10,
        weights: HybridWeights | None = None,
        flt: MetadataFilter | None = None,
        concurrent: bool | None = None,
        rescore: bool = True,
    ) -> list[FusedHit]:
        if not query or not query.strip():
            raise ValueError("query must be non-empty")
        weights = weights or self.config.weights
        if concurrent is None:
            concurrent = self.config.search.concurrent_legs
        return hybrid_search(
            query,
            k,
            weights,
            lexical_leg=lambda q: self.lexical_hits(q, flt=flt),
            semantic_leg=lambda q: self.semantic_hits(q, rescore=rescore, flt=flt),
            concurrent=concurrent,
            allow_degraded=self.config.search.allow_degraded,
        )

    def ranked_pmids(self, query: str, k: int, config: RetrievalConfig) -> list[str]:
        """Document-level ranking for one eval configuration."""
        if config.mode == "lexical":
            hits = self.lexical_hits(query, remove_stopwords=config.remove_stopwords)
            return [h.doc_pmid for h in aggregate_chunks(hits)[:k]]
        if config.mode == "semantic":
            hits = self.semantic_hits(query, rescore=config.rescore)
            return [h.doc_pmid for h in aggregate_chunks(hits)[:k]]
        if config.mode == "hybrid":
            return [h.doc_pmid for h in self.search(query, k, weights=config.weights)]
        raise ValueError(f"unknown retrieval mode {config.mode!r}")

    # -- answering ------------------------------------------------------------

    def retrieve(self, query: str, k: int) -> list[AbstractRef]:
        refs = []
        for hit in self.search(query, k):
            doc = self.docs[hit.doc_pmid]
            refs.append(AbstractRef(pmid=doc.pmid, title=doc.title, abstract=doc.abstract))
        return refs

    def answer(
        self,
        question: str,
        k: int | None = None,
        weights: HybridWeights | None = None,
    ) -> tuple[ReferencedAnswer, CitationAudit, ContextBundle, list[FusedHit]]:
        k = k or self.config.context_size
        fused = self.search(question, k, weights=weights)
        abstracts = tuple(
            AbstractRef(
                pmid=h.doc_pmid,
                title=self.docs[h.doc_pmid].title,
                abstract=self.docs[h.doc_pmid].abstract,
            )
            for h in fused
        )
        bundle = ContextBundle(question=question, abstracts=abstracts)
        template = TEMPLATES[self.config.template_kind]
        answer = generate_answer(bundle, template, self.config.generation, self.client)
        audit = audit_answer(
            answer.text,
            set(bundle.pmids),
            question,
            {a.pmid: a.title for a in bundle.abstracts},
        )
        return answer, audit, bundle, fused

    def context_bundle(self, question: str, k: int | None = None) -> ContextBundle:
        return build_context(question, self, k or self.config.context_size)
