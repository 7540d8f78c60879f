"""Citation extraction and auditing of generated answers.

A citation is a parenthesized group of one or more PUBMED:<digits> tokens
separated by semicolons or commas, e.g. "(PUBMED:15466498; PUBMED:19916877)".
The tag is case-insensitive and spaces after the colon are tolerated; text
not matching the grammar is ignored, never an error.

An ID cited anywhere outside the supplied context set is hallucinated,
regardless of how close it looks to a real one; the digit edit distance to
the nearest context ID is reported as metadata.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Mapping

_GROUP_RE = re.compile(
    r"\(\s*PUBMED\s*:\s*\d+(?:\s*[;,]\s*PUBMED\s*:\s*\d+)*\s*\)",
    re.IGNORECASE,
)
_ID_RE = re.compile(r"PUBMED\s*:\s*(\d+)", re.IGNORECASE)


@dataclass(frozen=True)
class CitationSpan:
    pmid: str
    start: int
    end: int


@dataclass(frozen=True)
class HallucinatedId:
    pmid: str
    nearest_context_pmid: str
    digit_distance: int


@dataclass(frozen=True)
class CitationAudit:
    distinct_cited: frozenset[str]
    valid: frozenset[str]
    hallucinated: tuple[HallucinatedId, ...]
    no_references: bool
    most_relevant_pmid: str | None
    most_relevant_referenced: bool | None

    def to_dict(self) -> dict:
        return {
            "distinct_cited": sorted(self.distinct_cited, key=_pmid_order),
            "valid": sorted(self.valid, key=_pmid_order),
            "hallucinated": [
                {
                    "pmid": h.pmid,
                    "nearest_context_pmid": h.nearest_context_pmid,
                    "digit_distance": h.digit_distance,
                }
                for h in self.hallucinated
            ],
            "no_references": self.no_references,
            "most_relevant_pmid": self.most_relevant_pmid,
            "most_relevant_referenced": self.most_relevant_referenced,
        }


def _pmid_order(pmid: str) -> tuple[int, str]:
    return (int(pmid), pmid)


def extract_citations(text: str) -> list[CitationSpan]:
    """All cited IDs with their character spans, ordered by start offset.

    Each ID inside a group yields its own span covering the PUBMED token
    through its digits.
    """
    spans: list[CitationSpan] = []
    for group in _GROUP_RE.finditer(text):
        for m in _ID_RE.finditer(group.group(0)):
            start = group.start() + m.start()
            end = group.start() + m.end()
            spans.append(CitationSpan(pmid=m.group(1), start=start, end=end))
    return spans


def digit_distance(a: str, b: str) -> int:
    """Levenshtein distance over digit strings."""
    for name, value in (("a", a), ("b", b)):
        if not value or not value.isdigit():
            raise ValueError(f"{name} must be a non-empty digit string, got {value!r}")
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def normalize_title(text: str) -> str:
    """Lowercase, remove punctuation entirely, collapse whitespace."""
    stripped = "".join(
        ch for ch in text.lower() if not unicodedata.category(ch).startswith("P")
    )
    return " ".join(stripped.split())


def title_matches_question(question: str, title: str) -> bool:
    return normalize_title(question) == normalize_title(title)


def audit_answer(
    answer_text: str,
    context_pmids: set[str],
    question: str,
    context_titles: Mapping[str, str],
) -> CitationAudit:
    """Partition cited IDs into valid and hallucinated and apply the
    title-matches-question relevance heuristic.

    context_titles must preserve context order; the first title matching
    the question is taken as the most relevant abstract.
    """
    if not context_pmids:
        raise ValueError("context_pmids must be non-empty")
    cited = {span.pmid for span in extract_citations(answer_text)}
    valid = cited & context_pmids
    hallucinated = []
    for pmid in sorted(cited - context_pmids, key=_pmid_order):
        nearest = min(context_pmids, key=lambda c: (digit_distance(pmid, c), _pmid_order(c)))
        hallucinated.append(
            HallucinatedId(
                pmid=pmid,
                nearest_context_pmid=nearest,
                digit_distance=digit_distance(pmid, nearest),
            )
        )
    most_relevant = None
    for pmid, title in context_titles.items():
        if title_matches_question(question, title):
            most_relevant = pmid
            break
    return CitationAudit(
        distinct_cited=frozenset(cited),
        valid=frozenset(valid),
        hallucinated=tuple(hallucinated),
        no_references=not cited,
        most_relevant_pmid=most_relevant,
        most_relevant_referenced=(most_relevant in cited) if most_relevant is not None else None,
    )
