"""Text analysis primitives: tokenization, sentence segmentation, query analysis.

The default tokenizer splits on Unicode whitespace and then peels leading and
trailing punctuation characters off each run into separate tokens. It is
deterministic and dependency-free, and over-counts relative to subword
tokenizers, so token budgets stated in subwords are never exceeded by much.

Sentence segmentation is rule-based: a sentence ends at '.', '?' or '!'
followed by whitespace and then an uppercase letter or digit, unless the
terminator sits inside a decimal number or ends a known abbreviation.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Callable

Span = tuple[int, int]

# External tokenizers register a span function here, keyed by identifier.
# A span function maps text -> list of (start, end) character spans, one per
# token, in order. Registration is how a model tokenizer gets wired in.
EXTERNAL_TOKENIZERS: dict[str, Callable[[str], list[Span]]] = {}


@dataclass(frozen=True)
class TokenizerSpec:
    """Selects the token-counting rule used for chunk budgets.

    kind "whitespace_punct" is the built-in default; "external" looks up
    `identifier` in EXTERNAL_TOKENIZERS.
    """

    kind: str = "whitespace_punct"
    identifier: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("whitespace_punct", "external"):
            raise ValueError(f"unknown tokenizer kind: {self.kind!r}")
        if self.kind == "external" and not self.identifier:
            raise ValueError("external tokenizer requires an identifier")


DEFAULT_TOKENIZER = TokenizerSpec()

_NONSPACE_RE = re.compile(r"\S+")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _whitespace_punct_spans(text: str) -> list[Span]:
    spans: list[Span] = []
    for match in _NONSPACE_RE.finditer(text):
        start, end = match.span()
        # Peel leading punctuation characters, one token each.
        core_start = start
        while core_start < end and _is_punct(text[core_start]):
            spans.append((core_start, core_start + 1))
            core_start += 1
        # Find where trailing punctuation begins.
        core_end = end
        while core_end > core_start and _is_punct(text[core_end - 1]):
            core_end -= 1
        if core_end > core_start:
            spans.append((core_start, core_end))
        for i in range(core_end, end):
            spans.append((i, i + 1))
    return spans


def tokenize_spans(text: str, spec: TokenizerSpec = DEFAULT_TOKENIZER) -> list[Span]:
    """Token character spans under the given tokenizer spec."""
    if spec.kind == "whitespace_punct":
        return _whitespace_punct_spans(text)
    fn = EXTERNAL_TOKENIZERS.get(spec.identifier)
    if fn is None:
        raise KeyError(f"external tokenizer not registered: {spec.identifier!r}")
    return fn(text)


def tokenize(text: str, spec: TokenizerSpec = DEFAULT_TOKENIZER) -> list[str]:
    return [text[s:e] for s, e in tokenize_spans(text, spec)]


def count_tokens(text: str, spec: TokenizerSpec = DEFAULT_TOKENIZER) -> int:
    return len(tokenize_spans(text, spec))


# ---------------------------------------------------------------------------
# Sentence segmentation
# ---------------------------------------------------------------------------

# Lowercased endings that must not terminate a sentence. Matched at a word
# boundary (start of text or a non-letter before the abbreviation).
ABBREVIATIONS = ("e.g.", "i.e.", "et al.", "fig.", "vs.")

_TERMINATORS = ".?!"


def _ends_with_abbreviation(text: str, dot_index: int) -> bool:
    prefix = text[: dot_index + 1].lower()
    for abbr in ABBREVIATIONS:
        if not prefix.endswith(abbr):
            continue
        before = dot_index - len(abbr)
        if before < 0 or not text[before].isalpha():
            return True
    return False


def _is_sentence_break(text: str, i: int) -> bool:
    ch = text[i]
    if ch not in _TERMINATORS:
        return False
    n = len(text)
    if i + 1 >= n or not text[i + 1].isspace():
        return False
    j = i + 1
    while j < n and text[j].isspace():
        j += 1
    if j >= n or not (text[j].isupper() or text[j].isdigit()):
        return False
    if ch == ".":
        # Inside a decimal number: digit on both sides of the dot.
        if 0 < i < n - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
            return False
        if _ends_with_abbreviation(text, i):
            return False
    return True


def sentence_segment(text: str) -> list[Span]:
    """Split text into sentence spans.

    Spans are contiguous, non-overlapping, and cover the whole text. Each
    span ends right after a sentence terminator, or at end of text. Text
    with no terminator comes back as a single span.
    """
    if not text:
        raise ValueError("cannot segment empty text")
    spans: list[Span] = []
    start = 0
    for i in range(len(text)):
        if _is_sentence_break(text, i):
            spans.append((start, i + 1))
            start = i + 1
    if start < len(text):
        spans.append((start, len(text)))
    return spans


def ends_sentence(text: str) -> bool:
    """True if text ends with a sentence terminator, allowing a closing
    quote or bracket and trailing whitespace after it."""
    return bool(re.search(r"[.?!][\"'’”)\]]*\s*$", text))


# ---------------------------------------------------------------------------
# Query / index analysis
# ---------------------------------------------------------------------------

# Lowercased alphanumeric runs; punctuation splits terms, so a hyphenated
# word yields its parts.
_TERM_RE = re.compile(r"[^\W_]+", re.UNICODE)

# The standard 33-term minimal English stoplist, plus interrogatives.
STOPWORDS = frozenset(
    {
        "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if",
        "in", "into", "is", "it", "no", "not", "of", "on", "or", "such",
        "that", "the", "their", "then", "there", "these", "they", "this",
        "to", "was", "will", "with",
        "what", "which", "does", "how", "why",
    }
)


def analyze(text: str) -> list[str]:
    """Lowercased, punctuation-stripped terms for the lexical index."""
    return [m.group(0).lower() for m in _TERM_RE.finditer(text)]


def analyze_query(text: str, remove_stopwords: bool = True) -> list[str]:
    terms = analyze(text)
    if remove_stopwords:
        terms = [t for t in terms if t not in STOPWORDS]
    return terms
