"""HTTP service over a sealed index: search, answer, abstract lookup.

Every JSON response carries schema_version. Error mapping: 400 malformed
request with field-level messages, 404 unknown pmid, 502 when a retrieval
leg or the generator backend fails (the failing leg is named), 503 before
the indices are open.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import Engine
from .hybrid import HybridWeights, LegFailure
from .lexical import MetadataFilter
from .ragchain import GenerationClientError
from .semantic import EmbedderError

SCHEMA_VERSION = "1"


class SearchRequest(BaseModel):
    query: str
    k: int = 10
    w_lex: float | None = None
    w_sem: float | None = None
    journal: str | None = None
    author: str | None = None
    date_from: str | None = None
    date_to: str | None = None


class AnswerRequest(BaseModel):
    question: str
    k: int | None = None
    w_lex: float | None = None
    w_sem: float | None = None


def _field_errors(*errors: tuple[str, str]) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={
            "schema_version": SCHEMA_VERSION,
            "error": "invalid request",
            "fields": [{"field": f, "message": m} for f, m in errors],
        },
    )


def _weights_from(w_lex: float | None, w_sem: float | None, default: HybridWeights):
    """Returns (weights, error_response). Both sides default independently."""
    lex = default.w_lex if w_lex is None else w_lex
    sem = default.w_sem if w_sem is None else w_sem
    errors = []
    if lex < 0:
        errors.append(("w_lex", "must be >= 0"))
    if sem < 0:
        errors.append(("w_sem", "must be >= 0"))
    if not errors and lex + sem <= 0:
        errors.append(("w_lex", "w_lex + w_sem must be > 0"))
    if errors:
        return None, _field_errors(*errors)
    return HybridWeights(w_lex=lex, w_sem=sem), None


def create_app(get_engine: Callable[[], Engine | None], ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="refmed", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        fields = [
            (".".join(str(p) for p in err["loc"] if p != "body"), err["msg"])
            for err in exc.errors()
        ]
        return _field_errors(*fields)

    @app.exception_handler(LegFailure)
    async def leg_failure_handler(request: Request, exc: LegFailure):
        return JSONResponse(
            status_code=502,
            content={
                "schema_version": SCHEMA_VERSION,
                "error": str(exc),
                "leg": exc.leg,
            },
        )

    def engine_or_503() -> Engine | JSONResponse:
        engine = get_engine()
        if engine is None:
            return JSONResponse(
                status_code=503,
                content={"schema_version": SCHEMA_VERSION, "status": "loading"},
            )
        return engine

    @app.get("/healthz")
    async def healthz():
        engine = get_engine()
        if engine is None:
            return JSONResponse(
                status_code=503,
                content={"schema_version": SCHEMA_VERSION, "status": "loading"},
            )
        return {"schema_version": SCHEMA_VERSION, "status": "ok", "docs": len(engine.docs)}

    @app.get("/config")
    async def config_view():
        engine = engine_or_503()
        if isinstance(engine, JSONResponse):
            return engine
        return {"schema_version": SCHEMA_VERSION, "config": engine.config.to_sanitized_dict()}

    @app.get("/abstract/{pmid}")
    async def abstract(pmid: str):
        engine = engine_or_503()
        if isinstance(engine, JSONResponse):
            return engine
        doc = engine.docs.get(pmid)
        if doc is None:
            return JSONResponse(
                status_code=404,
                content={"schema_version": SCHEMA_VERSION, "error": f"unknown pmid {pmid}"},
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "pmid": doc.pmid,
            "title": doc.title,
            "abstract": doc.abstract,
            "authors": list(doc.authors),
            "journal": doc.journal,
            "pub_date": doc.pub_date,
        }

    @app.post("/search")
    async def search(body: SearchRequest):
        engine = engine_or_503()
        if isinstance(engine, JSONResponse):
            return engine
        if not body.query.strip():
            return _field_errors(("query", "must be non-empty"))
        if body.k < 1:
            return _field_errors(("k", "must be >= 1"))
        weights, err = _weights_from(body.w_lex, body.w_sem, engine.config.weights)
        if err is not None:
            return err
        flt = MetadataFilter(
            journal=body.journal,
            author=body.author,
            date_from=body.date_from,
            date_to=body.date_to,
        )
        hits = engine.search(body.query, body.k, weights=weights, flt=flt)
        return {
            "schema_version": SCHEMA_VERSION,
            "hits": [
                {
                    "rank": rank,
                    "pmid": h.doc_pmid,
                    "title": engine.docs[h.doc_pmid].title,
                    "norm_lex": h.norm_lex,
                    "norm_sem": h.norm_sem,
                    "fused": h.fused,
                }
                for rank, h in enumerate(hits, start=1)
            ],
        }

    @app.post("/answer")
    async def answer(body: AnswerRequest):
        engine = engine_or_503()
        if isinstance(engine, JSONResponse):
            return engine
        if not body.question.strip():
            return _field_errors(("question", "must be non-empty"))
        if body.k is not None and body.k < 1:
            return _field_errors(("k", "must be >= 1"))
        weights, err = _weights_from(body.w_lex, body.w_sem, engine.config.weights)
        if err is not None:
            return err
        try:
            answer, audit, bundle, fused = engine.answer(body.question, body.k, weights=weights)
        except (GenerationClientError, EmbedderError) as exc:
            return JSONResponse(
                status_code=502,
                content={
                    "schema_version": SCHEMA_VERSION,
                    "error": str(exc),
                    "leg": "generation" if isinstance(exc, GenerationClientError) else "embedder",
                },
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "answer": answer.text,
            "truncated": answer.truncated,
            "citations": [
                {"pmid": span.pmid, "start": span.start, "end": span.end}
                for span in answer.citations
            ],
            "audit": audit.to_dict(),
            "context": [
                {
                    "rank": rank,
                    "pmid": h.doc_pmid,
                    "title": engine.docs[h.doc_pmid].title,
                    "fused": h.fused,
                }
                for rank, h in enumerate(fused, start=1)
            ],
        }

    if ui_dir is not None and ui_dir.exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
