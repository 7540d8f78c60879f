"""Context assembly, prompt rendering, answer generation, post-processing.

The generator sits behind a client boundary. Three clients ship in-tree:
an HTTP chat-completion client for a real model endpoint, a deterministic
extractive stub so every pipeline test runs without any model, and a
replay client that serves recorded answers keyed by question.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .analysis import ends_sentence, sentence_segment
from .citations import CitationSpan, extract_citations

DEFAULT_CONTEXT_SIZE = 10
DEFAULT_MAX_NEW_TOKENS = 1225


class GenerationClientError(RuntimeError):
    """Generator backend failure; carries the request id for tracing."""

    def __init__(self, request_id: str, detail: str):
        super().__init__(f"generation request {request_id} failed: {detail}")
        self.request_id = request_id
        self.detail = detail


class PromptTemplateError(ValueError):
    pass


@dataclass(frozen=True)
class AbstractRef:
    pmid: str
    title: str
    abstract: str


@dataclass(frozen=True)
class ContextBundle:
    question: str
    abstracts: tuple[AbstractRef, ...]

    def __post_init__(self) -> None:
        pmids = [a.pmid for a in self.abstracts]
        if len(set(pmids)) != len(pmids):
            raise ValueError("context abstracts must have distinct pmids")

    @property
    def pmids(self) -> list[str]:
        return [a.pmid for a in self.abstracts]


@dataclass(frozen=True)
class PromptTemplate:
    kind: str  # zero_shot | fine_tuned | dataset_builder
    body: str

    def __post_init__(self) -> None:
        if self.body.count("{instruction}") != 1:
            raise PromptTemplateError("template body must contain {instruction} exactly once")
        if self.kind == "zero_shot" and "PUBMED:1235" not in self.body:
            raise PromptTemplateError("zero_shot template must show the PUBMED:1235 example")
        if self.kind == "dataset_builder" and "up to 300 words" not in self.body:
            raise PromptTemplateError("dataset_builder template must bound the answer length")


TEMPLATES: dict[str, PromptTemplate] = {
    "zero_shot": PromptTemplate(
        kind="zero_shot",
        body=(
            "Respond to the Instruction using only the information provided in the "
            "relevant abstracts under Abstracts. Reference the statements with the "
            "provided abstract_id in brackets next to the statement "
            "(for example PUBMED:1235):\n{instruction}"
        ),
    ),
    "fine_tuned": PromptTemplate(
        kind="fine_tuned",
        body=(
            "Respond to the Instruction using only the information provided in the "
            "relevant abstracts in ```Abstracts``` below.\n\n{instruction}\n\nAnswer:"
        ),
    ),
    "dataset_builder": PromptTemplate(
        kind="dataset_builder",
        body=(
            "Answer the question using relevant abstracts provided, up to 300 words. "
            "Reference the statements with the provided abstract_id in brackets next "
            "to the statement.\n\n{instruction}"
        ),
    ),
}


@dataclass(frozen=True)
class GenerationConfig:
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS
    extra: Mapping[str, object] = field(default_factory=dict)  # passed through opaquely

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    question: str
    config: GenerationConfig
    request_id: str


@dataclass(frozen=True)
class ReferencedAnswer:
    text: str
    citations: tuple[CitationSpan, ...]
    truncated: bool


class AnswerClient(Protocol):
    def complete(self, request: GenerationRequest) -> str: ...


class Retriever(Protocol):
    def retrieve(self, query: str, k: int) -> Sequence[AbstractRef]: ...


def build_context(query: str, retriever: Retriever, k: int = DEFAULT_CONTEXT_SIZE) -> ContextBundle:
    """Top-k retrieved abstracts in rank order; fewer than k only when the
    corpus is smaller than k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    abstracts = tuple(retriever.retrieve(query, k))
    return ContextBundle(question=query, abstracts=abstracts)


def render_instruction(bundle: ContextBundle) -> str:
    blocks = [bundle.question]
    for ref in bundle.abstracts:
        blocks.append(
            f"abstract_id: PUBMED:{ref.pmid}\ntitle: {ref.title}\nabstract: {ref.abstract}"
        )
    return "\n\n".join(blocks)


def render_prompt(template: PromptTemplate, bundle: ContextBundle) -> str:
    return template.body.replace("{instruction}", render_instruction(bundle))


def truncate_incomplete_final_sentence(text: str) -> tuple[str, bool]:
    """Drop an unterminated trailing sentence.

    The terminator search runs through the sentence segmenter, so
    abbreviation and decimal guards apply. Text with no terminator at all
    becomes empty.
    """
    if not text:
        return "", True
    if ends_sentence(text):
        return text, False
    spans = sentence_segment(text)
    if len(spans) == 1:
        return "", True
    last_start = spans[-1][0]
    return text[:last_start], True


def generate_answer(
    bundle: ContextBundle,
    template: PromptTemplate,
    config: GenerationConfig,
    client: AnswerClient,
) -> ReferencedAnswer:
    """Render the prompt, call the client, post-process, extract citations."""
    request = GenerationRequest(
        prompt=render_prompt(template, bundle),
        question=bundle.question,
        config=config,
        request_id=uuid.uuid4().hex,
    )
    completion = client.complete(request)
    if not isinstance(completion, str) or not completion:
        raise GenerationClientError(request.request_id, "client returned an empty completion")
    text, truncated = truncate_incomplete_final_sentence(completion)
    return ReferencedAnswer(
        text=text,
        citations=tuple(extract_citations(text)),
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------


class ExtractiveStubClient:
    """Deterministic model stand-in.

    Reads the abstracts back out of the rendered prompt and answers with
    the first sentence of each of the top `cite_top` abstracts, each
    suffixed with its citation. Seeing only the prompt keeps the client
    boundary honest.
    """

    def __init__(self, cite_top: int = 3):
        self.cite_top = cite_top

    def complete(self, request: GenerationRequest) -> str:
        import re

        block_re = re.compile(
            r"abstract_id: PUBMED:(\d+)\ntitle: (.*?)\nabstract: (.*?)(?=\n\nabstract_id: PUBMED:|\n\nAnswer:|$)",
            re.DOTALL,
        )
        sentences = []
        for m in block_re.finditer(request.prompt):
            pmid, _title, abstract = m.group(1), m.group(2), m.group(3)
            first_start, first_end = sentence_segment(abstract)[0]
            first = abstract[first_start:first_end].strip()
            first = first.rstrip(".?!").rstrip()
            sentences.append(f"{first} (PUBMED:{pmid}).")
            if len(sentences) >= self.cite_top:
                break
        if not sentences:
            return "The provided abstracts do not contain an answer."
        return " ".join(sentences)


class ReplayClient:
    """Serves recorded answers keyed by exact question text."""

    def __init__(self, answers: Mapping[str, str]):
        self._answers = dict(answers)

    @classmethod
    def from_jsonl(cls, path: Path | str) -> "ReplayClient":
        """Load {"question": ..., "text": ...} records, one per line."""
        import json

        answers: dict[str, str] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            answers[record["question"]] = record["text"]
        return cls(answers)

    def complete(self, request: GenerationRequest) -> str:
        answer = self._answers.get(request.question)
        if answer is None:
            raise GenerationClientError(
                request.request_id, f"no recorded answer for question {request.question!r}"
            )
        return answer


class HttpChatClient:
    """Single-turn chat-completion client for an external model endpoint.

    Sampling parameters in GenerationConfig.extra pass through opaquely;
    they configure the external model, not this artifact.
    """

    def __init__(self, url: str, model: str | None = None, timeout: float = 120.0):
        self.url = url
        self.model = model
        self.timeout = timeout

    def complete(self, request: GenerationRequest) -> str:
        import httpx

        payload: dict[str, object] = {
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.config.max_new_tokens,
        }
        if self.model:
            payload["model"] = self.model
        payload.update(request.config.extra)
        try:
            resp = httpx.post(self.url, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except Exception as exc:  # noqa: BLE001 - boundary, re-raised typed
            raise GenerationClientError(request.request_id, str(exc)) from exc
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise GenerationClientError(
                request.request_id, f"malformed completion response from {self.url}"
            ) from None
        if not isinstance(content, str) or not content:
            raise GenerationClientError(request.request_id, "completion content empty")
        return content
