"""IR metrics, answer-reference statistics, and report generation.

Conventions, pinned here because the metric names alone do not fix them:
P@k divides by k even when fewer than k documents come back (missing slots
are misses), and AP@k uses the min(|gold|, k) denominator:

    AP@k = (1 / min(|gold|, k)) * sum_{r=1..k} [retrieved_r in gold] * P@r
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .citations import audit_answer
from .hybrid import HybridWeights
from .ragchain import ReferencedAnswer

RELEVANT = "relevant"
PARTIALLY_IRRELEVANT = "partially_irrelevant"
COMPLETELY_IRRELEVANT = "completely_irrelevant"
_LABELS = frozenset({RELEVANT, PARTIALLY_IRRELEVANT, COMPLETELY_IRRELEVANT})


class EvalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Core metrics
# ---------------------------------------------------------------------------


def precision_at_k(retrieved: Sequence[str], gold: set[str], k: int) -> float:
    if k < 1:
        raise EvalError("k must be >= 1")
    if not retrieved:
        return 0.0
    return len(set(retrieved[:k]) & gold) / k


def average_precision_at_k(retrieved: Sequence[str], gold: set[str], k: int) -> float:
    if k < 1:
        raise EvalError("k must be >= 1")
    if not gold:
        raise EvalError("gold set must be non-empty")
    total = 0.0
    hits = 0
    for rank, pmid in enumerate(retrieved[:k], start=1):
        if pmid in gold:
            hits += 1
            total += hits / rank
    return total / min(len(gold), k)


# ---------------------------------------------------------------------------
# Qrels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QrelEntry:
    question_id: str
    question: str
    gold_pmids: frozenset[str]

    def __post_init__(self) -> None:
        if not self.gold_pmids:
            raise EvalError(f"question {self.question_id}: gold_pmids must be non-empty")


@dataclass(frozen=True)
class Qrels:
    entries: tuple[QrelEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.question_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise EvalError("question_ids must be unique")

    @classmethod
    def from_jsonl(cls, path: Path | str) -> "Qrels":
        entries = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            entries.append(
                QrelEntry(
                    question_id=str(raw["question_id"]),
                    question=raw["question"],
                    gold_pmids=frozenset(raw["gold_pmids"]),
                )
            )
        return cls(tuple(entries))


def qrels_from_bioasq(payload: Mapping) -> Qrels:
    """Adapter for the BioASQ JSON layout: questions carry document URLs
    whose trailing path segment is the PMID."""
    entries = []
    for q in payload.get("questions", []):
        pmids = frozenset(url.rstrip("/").rsplit("/", 1)[-1] for url in q.get("documents", []))
        if not pmids:
            continue
        entries.append(
            QrelEntry(question_id=str(q["id"]), question=q["body"], gold_pmids=pmids)
        )
    return Qrels(tuple(entries))


# ---------------------------------------------------------------------------
# IR evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RetrievalConfig:
    name: str
    mode: str  # lexical | semantic | hybrid
    rescore: bool = True
    remove_stopwords: bool = True
    weights: HybridWeights = field(default_factory=HybridWeights)


def default_config_table() -> list[RetrievalConfig]:
    """The standard comparison table: semantic with and without rescore,
    the hybrid weight sweep, and lexical with and without stopword removal."""
    rows = [
        RetrievalConfig("Semantic without rescore", "semantic", rescore=False),
        RetrievalConfig("Semantic with rescore", "semantic", rescore=True),
    ]
    for tenths in range(1, 10):
        w_lex = tenths / 10.0
        w_sem = (10 - tenths) / 10.0
        rows.append(
            RetrievalConfig(
                f"Hybrid with rescore (lex. {w_lex:.1f} sem. {w_sem:.1f})",
                "hybrid",
                weights=HybridWeights(w_lex=w_lex, w_sem=w_sem),
            )
        )
    rows.append(RetrievalConfig("Lexical with stopwords removal", "lexical", remove_stopwords=True))
    rows.append(
        RetrievalConfig("Lexical without stopwords removal", "lexical", remove_stopwords=False)
    )
    return rows


@dataclass
class QuestionResult:
    question_id: str
    p_at_k: float
    ap_at_k: float
    latency_ms: float


@dataclass
class IRMetrics:
    name: str
    p_at_10: float
    map_at_10: float
    mean_latency_ms: float
    per_question: list[QuestionResult]
    missing_gold_pmids: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "p_at_10": self.p_at_10,
            "map_at_10": self.map_at_10,
            "mean_latency_ms": self.mean_latency_ms,
            "missing_gold_pmids": self.missing_gold_pmids,
            "per_question": [
                {
                    "question_id": q.question_id,
                    "p_at_k": q.p_at_k,
                    "ap_at_k": q.ap_at_k,
                    "latency_ms": q.latency_ms,
                }
                for q in self.per_question
            ],
        }


# A ranked retrieval function: (query, k, config) -> ordered pmids.
RankedSearch = Callable[[str, int, RetrievalConfig], list[str]]


def run_ir_eval(
    search: RankedSearch,
    qrels: Qrels,
    configs: Sequence[RetrievalConfig] | None = None,
    corpus_pmids: set[str] | None = None,
    k: int = 10,
    timer: Callable[[], float] = time.perf_counter,
) -> list[IRMetrics]:
    """One metrics row per retrieval config.

    Latency is the wall time of the retrieval call alone, by the injected
    timer; injecting a constant timer makes the whole table reproducible
    byte for byte. Gold pmids absent from the corpus increment a warning
    counter instead of failing.
    """
    if configs is None:
        configs = default_config_table()
    rows = []
    for config in configs:
        per_question = []
        missing = 0
        for entry in qrels.entries:
            if corpus_pmids is not None:
                missing += sum(1 for pmid in entry.gold_pmids if pmid not in corpus_pmids)
            started = timer()
            retrieved = search(entry.question, k, config)
            elapsed_ms = (timer() - started) * 1000.0
            per_question.append(
                QuestionResult(
                    question_id=entry.question_id,
                    p_at_k=precision_at_k(retrieved, set(entry.gold_pmids), k),
                    ap_at_k=average_precision_at_k(retrieved, set(entry.gold_pmids), k),
                    latency_ms=elapsed_ms,
                )
            )
        n = len(per_question)
        rows.append(
            IRMetrics(
                name=config.name,
                p_at_10=sum(q.p_at_k for q in per_question) / n if n else 0.0,
                map_at_10=sum(q.ap_at_k for q in per_question) / n if n else 0.0,
                mean_latency_ms=sum(q.latency_ms for q in per_question) / n if n else 0.0,
                per_question=per_question,
                missing_gold_pmids=missing,
            )
        )
    return rows


def ir_table_to_markdown(rows: Sequence[IRMetrics]) -> str:
    lines = [
        "| | P@10 | MAP@10 | time [ms] |",
        "|---|---|---|---|",
    ]
    for i, row in enumerate(rows, start=1):
        lines.append(
            f"| {i}. {row.name} | {row.p_at_10 * 100:.1f}% | "
            f"{row.map_at_10 * 100:.1f}% | {row.mean_latency_ms:.0f} |"
        )
    return "\n".join(lines) + "\n"


def ir_table_to_json(rows: Sequence[IRMetrics]) -> str:
    return json.dumps([row.to_dict() for row in rows], indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Answer evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContextRecord:
    question_id: str
    abstracts: tuple[tuple[str, str], ...]  # (pmid, title) in rank order
    question: str | None = None

    @property
    def pmids(self) -> set[str]:
        return {pmid for pmid, _ in self.abstracts}


@dataclass(frozen=True)
class RelevanceLabels:
    """Per-question pmid -> label, covering exactly the context abstracts."""

    by_question: Mapping[str, Mapping[str, str]]

    def validate_against(self, contexts: Mapping[str, ContextRecord]) -> None:
        for qid, labels in self.by_question.items():
            bad = set(labels.values()) - _LABELS
            if bad:
                raise EvalError(f"question {qid}: unknown labels {sorted(bad)}")
            context = contexts.get(qid)
            if context is None:
                raise EvalError(f"labels reference unknown question {qid}")
            if set(labels) != context.pmids:
                raise EvalError(f"question {qid}: labels must cover exactly the context abstracts")

    @classmethod
    def from_jsonl(cls, path: Path | str) -> "RelevanceLabels":
        by_question = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            by_question[str(raw["question_id"])] = dict(raw["labels"])
        return cls(by_question)


@dataclass
class AnswerEvalReport:
    reference_histogram: list[int]  # index N = answers citing N distinct abstracts, N in 0..10
    total_references: int
    avg_references: float
    most_relevant_referenced: int
    most_relevant_missed: int
    hallucination_count: int
    reference_recall: float

    def to_dict(self) -> dict:
        return {
            "reference_histogram": self.reference_histogram,
            "total_references": self.total_references,
            "avg_references": self.avg_references,
            "most_relevant_referenced": self.most_relevant_referenced,
            "most_relevant_missed": self.most_relevant_missed,
            "hallucination_count": self.hallucination_count,
            "reference_recall": self.reference_recall,
        }


def answer_eval(
    answers: Iterable[tuple[str, ReferencedAnswer]],
    contexts: Mapping[str, ContextRecord],
    labels: RelevanceLabels,
    count_mode: str = "distinct",
) -> AnswerEvalReport:
    """Reference statistics over a batch of answers.

    count_mode "distinct" counts each cited abstract once per answer;
    "occurrences" counts every citation span. Reference recall pools
    (question, pmid) pairs over all questions: cited-and-relevant over
    all relevant. Most-relevant statistics cover only the questions whose
    context contains a title-match abstract.
    """
    if count_mode not in ("distinct", "occurrences"):
        raise EvalError(f"unknown count_mode {count_mode!r}")
    labels.validate_against(dict(contexts))
    histogram = [0] * 11
    total_refs = 0
    answers_seen = 0
    mr_referenced = 0
    mr_missed = 0
    hallucination_count = 0
    recall_hits = 0
    recall_total = 0
    for question_id, answer in answers:
        context = contexts.get(question_id)
        if context is None:
            raise EvalError(f"answer references unknown question {question_id}")
        question_labels = labels.by_question.get(question_id)
        if question_labels is None:
            raise EvalError(f"no labels for question {question_id}")
        audit = audit_answer(
            answer.text,
            context.pmids,
            context.question or "",
            dict(context.abstracts),
        )
        for pmid in audit.distinct_cited:
            if pmid in context.pmids and pmid not in question_labels:
                raise EvalError(f"question {question_id}: cited pmid {pmid} has no label")
        answers_seen += 1
        if count_mode == "distinct":
            n_refs = len(audit.distinct_cited)
        else:
            n_refs = len(answer.citations)
        total_refs += n_refs
        histogram[min(n_refs, 10)] += 1
        hallucination_count += len(audit.hallucinated)
        if audit.most_relevant_pmid is not None:
            if audit.most_relevant_referenced:
                mr_referenced += 1
            else:
                mr_missed += 1
        for pmid, label in question_labels.items():
            if label == RELEVANT:
                recall_total += 1
                if pmid in audit.valid:
                    recall_hits += 1
    if recall_total == 0:
        raise EvalError("no abstracts labeled relevant; recall is undefined")
    return AnswerEvalReport(
        reference_histogram=histogram,
        total_references=total_refs,
        avg_references=total_refs / answers_seen if answers_seen else 0.0,
        most_relevant_referenced=mr_referenced,
        most_relevant_missed=mr_missed,
        hallucination_count=hallucination_count,
        reference_recall=recall_hits / recall_total,
    )
