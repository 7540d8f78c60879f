"""Score normalization, weighted fusion, and the two-leg hybrid search.

Each retrieval leg returns raw-scored hits. Chunk hits are collapsed to one
hit per document (max over its chunks), each leg's scores are min-max
normalized over its own result list, and the two sides are combined as
w_lex * norm_lex + w_sem * norm_sem. A document missing from one leg
contributes 0 on that side.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence


class EmptyQueryError(ValueError):
    """Query analyzed to zero terms (e.g. all stopwords removed)."""


class LegFailure(RuntimeError):
    """One retrieval leg failed; carries which one for error reporting."""

    def __init__(self, leg: str, cause: BaseException):
        super().__init__(f"{leg} leg failed: {cause}")
        self.leg = leg
        self.cause = cause


@dataclass(frozen=True)
class SearchHit:
    doc_pmid: str
    raw_score: float
    source: str  # "lexical" | "semantic"
    chunk_seq: int | None = None


@dataclass(frozen=True)
class HybridWeights:
    w_lex: float = 0.7
    w_sem: float = 0.3

    def __post_init__(self) -> None:
        if self.w_lex < 0 or self.w_sem < 0:
            raise ValueError("weights must be non-negative")
        if self.w_lex + self.w_sem <= 0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class FusedHit:
    doc_pmid: str
    norm_lex: float
    norm_sem: float
    fused: float


def _pmid_order(pmid: str) -> tuple[int, str]:
    return (int(pmid), pmid)


def normalize_scores(hits: Sequence[SearchHit]) -> list[tuple[str, float]]:
    """Min-max normalize one leg's scores to [0, 1].

    A degenerate list (all scores equal, including a single hit) maps to
    1.0 so a leg with one strong hit still contributes its weight.
    """
    if not hits:
        return []
    scores = [h.raw_score for h in hits]
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [(h.doc_pmid, 1.0) for h in hits]
    return [(h.doc_pmid, (h.raw_score - lo) / (hi - lo)) for h in hits]


def aggregate_chunks(hits: Sequence[SearchHit]) -> list[SearchHit]:
    """Collapse chunk-level hits to one hit per document (max chunk score)."""
    best: dict[str, SearchHit] = {}
    for hit in hits:
        cur = best.get(hit.doc_pmid)
        if cur is None or hit.raw_score > cur.raw_score:
            best[hit.doc_pmid] = hit
    return sorted(best.values(), key=lambda h: (-h.raw_score, _pmid_order(h.doc_pmid)))


def fuse(
    lex: Sequence[tuple[str, float]],
    sem: Sequence[tuple[str, float]],
    weights: HybridWeights,
    k: int,
) -> list[FusedHit]:
    """Weighted fusion of two normalized document lists, top-k by fused score.

    Ties break by ascending pmid. A zero-weighted leg contributes no
    documents at all: its hits carry no evidence under the active weights,
    and keeping them would let them tie with the other leg's minimum
    (whose min-max norm is 0), breaking the reduction to pure single-leg
    ranking at endpoint weights.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lex_by_doc = dict(lex) if weights.w_lex > 0 else {}
    sem_by_doc = dict(sem) if weights.w_sem > 0 else {}
    fused: list[FusedHit] = []
    for pmid in lex_by_doc.keys() | sem_by_doc.keys():
        nl = lex_by_doc.get(pmid, 0.0)
        ns = sem_by_doc.get(pmid, 0.0)
        fused.append(
            FusedHit(
                doc_pmid=pmid,
                norm_lex=nl,
                norm_sem=ns,
                fused=weights.w_lex * nl + weights.w_sem * ns,
            )
        )
    fused.sort(key=lambda h: (-h.fused, _pmid_order(h.doc_pmid)))
    return fused[:k]


Leg = Callable[[str], list[SearchHit]]


def hybrid_search(
    query: str,
    k: int,
    weights: HybridWeights,
    lexical_leg: Leg,
    semantic_leg: Leg,
    concurrent: bool = True,
    allow_degraded: bool = False,
) -> list[FusedHit]:
    """Run both retrieval legs and fuse their document-level rankings.

    The legs may run concurrently; the merge is a deterministic join point,
    so the output is identical to sequential execution. A lexical leg that
    rejects the query as empty is treated as an empty list. Any other leg
    failure fails the whole query unless allow_degraded is set, in which
    case the failed leg contributes nothing.
    """

    def run_lexical() -> list[SearchHit]:
        try:
            return lexical_leg(query)
        except EmptyQueryError:
            return []

    def run_semantic() -> list[SearchHit]:
        return semantic_leg(query)

    if concurrent:
        with ThreadPoolExecutor(max_workers=2) as pool:
            lex_future = pool.submit(run_lexical)
            sem_future = pool.submit(run_semantic)
            lex_exc = lex_future.exception()
            sem_exc = sem_future.exception()
            lex_hits = [] if lex_exc else lex_future.result()
            sem_hits = [] if sem_exc else sem_future.result()
    else:
        lex_exc = sem_exc = None
        lex_hits: list[SearchHit] = []
        sem_hits: list[SearchHit] = []
        try:
            lex_hits = run_lexical()
        except BaseException as exc:  # noqa: BLE001 - re-wrapped below
            lex_exc = exc
        try:
            sem_hits = run_semantic()
        except BaseException as exc:  # noqa: BLE001
            sem_exc = exc

    if lex_exc is not None and not allow_degraded:
        raise LegFailure("lexical", lex_exc)
    if sem_exc is not None and not allow_degraded:
        raise LegFailure("semantic", sem_exc)

    lex_docs = aggregate_chunks(lex_hits)
    sem_docs = aggregate_chunks(sem_hits)
    return fuse(normalize_scores(lex_docs), normalize_scores(sem_docs), weights, k)
