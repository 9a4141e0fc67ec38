"""HTTP surface over the engine core, consumed by the advisor console.

Every failure returns one error object {code, message, detail} with code
in {bad_request, not_found, upstream_llm_error, conflict, internal}.
Handlers are synchronous: report generation is a blocking pipeline run
and the corpus scale keeps request times short.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (
    ActionCountViolation,
    CorpusNotSummarized,
    DuplicateId,
    FinbriefError,
    GatewayError,
    InsightParseFailure,
    MissingAnnotation,
    NoRelevantArticles,
    NotFound,
    UnparseableDecision,
    UnparseableSelection,
)
from .metrics import Strategy
from .personalize import render_report_text
from .service import NewsEngine

logger = logging.getLogger(__name__)

# Most specific classes first: the shared handler walks this list with
# isinstance, and each class is also registered so the exception
# middleware routes subclasses to it.
_ERROR_MAP: list[tuple[type[Exception], int, str]] = [
    (CorpusNotSummarized, 409, "conflict"),
    (DuplicateId, 409, "conflict"),
    (NoRelevantArticles, 404, "not_found"),
    (NotFound, 404, "not_found"),
    (UnparseableDecision, 502, "upstream_llm_error"),
    (UnparseableSelection, 502, "upstream_llm_error"),
    (InsightParseFailure, 502, "upstream_llm_error"),
    (ActionCountViolation, 502, "upstream_llm_error"),
    (GatewayError, 502, "upstream_llm_error"),
    (MissingAnnotation, 400, "bad_request"),
    (ValueError, 400, "bad_request"),
    (FinbriefError, 500, "internal"),
]


def _error_response(status: int, code: str, message: str, detail=None) -> JSONResponse:
    body = {"code": code, "message": message, "detail": detail}
    return JSONResponse(status_code=status, content=body)


class QueryBody(BaseModel):
    keyword: str
    strategy: str = Strategy.BINARY.value


class EvalBody(BaseModel):
    summary_pairs: list[dict] | None = None
    annotations: list[dict] | None = None
    predictions: dict[str, list[dict]] | None = None


class IngestItem(BaseModel):
    name: str
    text: str


class IngestBody(BaseModel):
    items: list[IngestItem]


def create_app(engine: NewsEngine) -> FastAPI:
    app = FastAPI(title="finbrief", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        # ctx values may hold exception objects; keep the JSON-safe parts
        detail = [
            {"loc": err.get("loc"), "msg": err.get("msg"), "type": err.get("type")}
            for err in exc.errors()
        ]
        return _error_response(400, "bad_request", "invalid request body", detail)

    async def handle_domain_error(request: Request, exc: Exception):
        for exc_type, status, code in _ERROR_MAP:
            if isinstance(exc, exc_type):
                return _error_response(status, code, str(exc))
        logger.exception("unhandled error on %s", request.url.path)
        return _error_response(500, "internal", "internal error")

    for exc_type, _status, _code in _ERROR_MAP:
        app.add_exception_handler(exc_type, handle_domain_error)

    @app.post("/ingest")
    def ingest(body: IngestBody):
        outcome = engine.ingest_texts([item.model_dump() for item in body.items])
        return outcome.to_payload()

    @app.post("/query")
    def query(body: QueryBody):
        strategy = Strategy(body.strategy)
        report = engine.query(body.keyword, strategy)
        payload = report.to_record()
        payload["rendered_text"] = render_report_text(report)
        return payload

    @app.post("/eval")
    def evaluate(body: EvalBody):
        report = engine.evaluate(
            summary_pairs=body.summary_pairs,
            annotations=body.annotations,
            predictions=body.predictions,
        )
        return report.to_payload()

    @app.get("/articles")
    def articles():
        return {"articles": engine.articles()}

    @app.get("/reports/{report_id}")
    def get_report(report_id: str):
        return engine.report(report_id)

    @app.get("/reports")
    def list_reports():
        return {"reports": engine.reports()}

    return app
