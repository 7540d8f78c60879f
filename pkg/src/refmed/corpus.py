"""Corpus ingestion, validation, and chunking into indexable segments.

The corpus file is UTF-8, one JSON object per line with keys pmid, title,
abstract, authors, journal, pub_date (the last three optional). Records with
a missing or whitespace-only abstract are skipped and counted; duplicate
pmids abort ingestion because citation auditing depends on unique IDs.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Iterator

from .analysis import (
    DEFAULT_TOKENIZER,
    TokenizerSpec,
    count_tokens,
    sentence_segment,
    tokenize_spans,
)

MAX_CHUNK_TOKENS = 512


class CorpusError(ValueError):
    """Base class for ingestion failures."""


class MalformedRecordError(CorpusError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicatePmidError(CorpusError):
    def __init__(self, line_no: int, pmid: str):
        super().__init__(f"line {line_no}: duplicate pmid {pmid}")
        self.line_no = line_no
        self.pmid = pmid


@dataclass(frozen=True)
class Document:
    """A single abstract record. Immutable after creation."""

    pmid: str
    title: str
    abstract: str
    authors: tuple[str, ...] = ()
    journal: str = ""
    pub_date: str | None = None

    def __post_init__(self) -> None:
        if not self.pmid or not self.pmid.isdigit():
            raise CorpusError(f"pmid must be a non-empty digit string, got {self.pmid!r}")
        if not self.abstract.strip():
            raise CorpusError(f"pmid {self.pmid}: empty abstract")

    @property
    def field_text(self) -> str:
        """The indexed field: title and abstract joined by a single space."""
        return f"{self.title} {self.abstract}" if self.title else self.abstract

    def to_json(self) -> str:
        return json.dumps(
            {
                "pmid": self.pmid,
                "title": self.title,
                "abstract": self.abstract,
                "authors": list(self.authors),
                "journal": self.journal,
                "pub_date": self.pub_date,
            },
            sort_keys=True,
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "Document":
        raw = json.loads(line)
        return cls(
            pmid=raw["pmid"],
            title=raw.get("title", ""),
            abstract=raw.get("abstract", ""),
            authors=tuple(raw.get("authors") or ()),
            journal=raw.get("journal") or "",
            pub_date=raw.get("pub_date"),
        )


@dataclass(frozen=True)
class Chunk:
    """A sentence-aligned segment of a document's indexed field."""

    doc_pmid: str
    seq: int
    text: str
    token_count: int


@dataclass
class CorpusStats:
    total_records: int = 0
    empty_skipped: int = 0
    indexed_documents: int = 0
    chunked_documents: int = 0
    mean_tokens_per_document: float = 0.0
    # Malformed lines are tracked outside total_records so that
    # total_records == empty_skipped + indexed_documents always holds.
    malformed_skipped: int = 0

    def validate(self) -> None:
        if self.total_records != self.empty_skipped + self.indexed_documents:
            raise CorpusError(
                f"inconsistent stats: {self.total_records} != "
                f"{self.empty_skipped} + {self.indexed_documents}"
            )

    def to_dict(self) -> dict:
        return {
            "total_records": self.total_records,
            "empty_skipped": self.empty_skipped,
            "indexed_documents": self.indexed_documents,
            "chunked_documents": self.chunked_documents,
            "mean_tokens_per_document": self.mean_tokens_per_document,
            "malformed_skipped": self.malformed_skipped,
        }


def _parse_record(line: str, line_no: int) -> dict:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(line_no, f"invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise MalformedRecordError(line_no, "record is not a JSON object")
    for key in ("pmid", "title"):
        if key not in raw:
            raise MalformedRecordError(line_no, f"missing required field {key!r}")
    pmid = raw["pmid"]
    if not isinstance(pmid, str) or not pmid or not pmid.isdigit():
        raise MalformedRecordError(line_no, f"pmid must be a digit string, got {pmid!r}")
    if not isinstance(raw["title"], str):
        raise MalformedRecordError(line_no, "title must be a string")
    abstract = raw.get("abstract", "")
    if abstract is None:
        abstract = ""
    if not isinstance(abstract, str):
        raise MalformedRecordError(line_no, "abstract must be a string")
    authors = raw.get("authors") or []
    if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
        raise MalformedRecordError(line_no, "authors must be a list of strings")
    journal = raw.get("journal") or ""
    if not isinstance(journal, str):
        raise MalformedRecordError(line_no, "journal must be a string")
    pub_date = raw.get("pub_date")
    if pub_date is not None:
        if not isinstance(pub_date, str):
            raise MalformedRecordError(line_no, "pub_date must be an ISO-8601 string")
        try:
            date.fromisoformat(pub_date)
        except ValueError:
            raise MalformedRecordError(line_no, f"pub_date not ISO-8601: {pub_date!r}") from None
    return {
        "pmid": pmid,
        "title": raw["title"],
        "abstract": abstract,
        "authors": tuple(authors),
        "journal": journal,
        "pub_date": pub_date,
    }


def ingest_corpus(
    lines: Iterable[str],
    tokenizer: TokenizerSpec = DEFAULT_TOKENIZER,
    on_malformed: str = "abort",
) -> tuple[Iterator[Document], CorpusStats]:
    """Stream validated documents out of a line-delimited record source.

    Returns a lazy document iterator and the stats object it fills in; the
    stats are complete once the iterator is exhausted. A record whose
    abstract is absent or whitespace-only is skipped and counted in
    empty_skipped. Malformed records raise (on_malformed="abort") or are
    skipped and counted (on_malformed="skip"). A duplicate pmid always
    aborts.
    """
    if on_malformed not in ("abort", "skip"):
        raise ValueError(f"on_malformed must be 'abort' or 'skip', got {on_malformed!r}")
    stats = CorpusStats()

    def generate() -> Iterator[Document]:
        seen: set[str] = set()
        token_total = 0
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                rec = _parse_record(line, line_no)
            except MalformedRecordError:
                if on_malformed == "abort":
                    raise
                stats.malformed_skipped += 1
                continue
            stats.total_records += 1
            if rec["pmid"] in seen:
                raise DuplicatePmidError(line_no, rec["pmid"])
            seen.add(rec["pmid"])
            if not rec["abstract"].strip():
                stats.empty_skipped += 1
                continue
            doc = Document(**rec)
            stats.indexed_documents += 1
            token_total += count_tokens(doc.field_text, tokenizer)
            stats.mean_tokens_per_document = token_total / stats.indexed_documents
            yield doc

    return generate(), stats


def chunk_document(
    doc: Document,
    tokenizer: TokenizerSpec = DEFAULT_TOKENIZER,
    max_tokens: int = MAX_CHUNK_TOKENS,
    counters: Counter | None = None,
) -> list[Chunk]:
    """Greedily pack whole sentences of the indexed field into chunks.

    A new chunk starts when adding the next sentence would exceed
    max_tokens. A single sentence longer than max_tokens is hard-split at
    token boundaries and counted under counters["oversized_sentences"];
    a hard split between tokens that were not whitespace-separated (e.g.
    inside a punctuation run) is the one case where rejoining chunks can
    introduce whitespace that the original lacked.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be positive")
    text = doc.field_text
    pieces: list[tuple[int, int, int]] = []  # (start, end, token_count)
    for s_start, s_end in sentence_segment(text):
        sent = text[s_start:s_end]
        spans = tokenize_spans(sent, tokenizer)
        if len(spans) <= max_tokens:
            pieces.append((s_start, s_end, len(spans)))
            continue
        if counters is not None:
            counters["oversized_sentences"] += 1
        for i in range(0, len(spans), max_tokens):
            group = spans[i : i + max_tokens]
            pieces.append((s_start + group[0][0], s_start + group[-1][1], len(group)))

    chunks: list[Chunk] = []
    cur_start: int | None = None
    cur_end = 0
    cur_tokens = 0

    def flush() -> None:
        nonlocal cur_start, cur_tokens
        if cur_start is None:
            return
        chunks.append(
            Chunk(
                doc_pmid=doc.pmid,
                seq=len(chunks),
                text=text[cur_start:cur_end],
                token_count=cur_tokens,
            )
        )
        cur_start = None
        cur_tokens = 0

    for p_start, p_end, p_tokens in pieces:
        if cur_start is not None and cur_tokens + p_tokens > max_tokens:
            flush()
        if cur_start is None:
            cur_start = p_start
        cur_end = p_end
        cur_tokens += p_tokens
    flush()
    return chunks


def chunk_corpus(
    docs: Iterable[Document],
    tokenizer: TokenizerSpec = DEFAULT_TOKENIZER,
    max_tokens: int = MAX_CHUNK_TOKENS,
    stats: CorpusStats | None = None,
    counters: Counter | None = None,
) -> Iterator[Chunk]:
    """Chunk a document stream, tracking how many documents got subdivided."""
    for doc in docs:
        chunks = chunk_document(doc, tokenizer, max_tokens, counters)
        if stats is not None and len(chunks) > 1:
            stats.chunked_documents += 1
        yield from chunks
