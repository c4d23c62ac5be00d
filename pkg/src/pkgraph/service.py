"""Local HTTP service: the glass-box inspection and curation surface.

Loopback-only by default (the sovereignty guard); every response is JSON
with a stable schema_version field. Mutations serialize through the store's
single writer.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .engine import Engine, ServiceConfig
from .errors import (
    CannotDeleteRootError,
    ImportFormatError,
    ImportStateError,
    PkgraphError,
    UnknownNodeError,
)
from .ingestion import batch_stats
from .model import Answer, RetrievedSubgraph, edge_to_dict, node_to_dict
from .portable import export_portable, export_text, import_lines, import_portable

SCHEMA_VERSION = 1

_LOOPBACK_HOSTS = {"127.0.0.1", "::1", "localhost", "testclient", None}


def _payload(**fields) -> dict:
    return {"schema_version": SCHEMA_VERSION, **fields}


def _error_response(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content=_payload(error={"type": kind, "message": message}))


def _answer_dict(answer: Answer) -> dict:
    return {"text": answer.text, "citations": answer.citations,
            "refused": answer.refused, "engine": answer.engine}


def _subgraph_dict(subgraph: RetrievedSubgraph) -> dict:
    return {
        "anchors": [{"id": a.id, "score": a.score} for a in subgraph.anchors],
        "nodes": [node_to_dict(n) for n in subgraph.nodes],
        "hops": dict(subgraph.hops),
        "edges": [edge_to_dict(e) for e in subgraph.edges],
        "context": subgraph.context,
        "truncated": subgraph.truncated,
    }


def _report_dict(report) -> dict:
    return {
        "record": report.record,
        "created_nodes": report.created_nodes,
        "merged_into": [[surface, node_id] for surface, node_id in report.merged_into],
        "created_edges": report.created_edges,
        "skipped_duplicate": report.skipped_duplicate,
        "elapsed_ms": report.elapsed_ms,
        "error": report.error,
    }


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="pkgraph", docs_url=None, redoc_url=None)
    app.state.engine = engine
    allow_remote = engine.config.allow_non_loopback

    @app.middleware("http")
    async def loopback_guard(request: Request, call_next):
        client = request.client.host if request.client else None
        if not allow_remote and client not in _LOOPBACK_HOSTS:
            return _error_response(403, "forbidden",
                                   "loopback-only service; restart with --unsafe-bind")
        return await call_next(request)

    @app.exception_handler(PkgraphError)
    async def domain_error(request: Request, exc: PkgraphError):
        status = 500
        if isinstance(exc, UnknownNodeError):
            status = 404
        elif isinstance(exc, (CannotDeleteRootError, ImportStateError)):
            status = 409
        elif isinstance(exc, ImportFormatError):
            status = 400
        return _error_response(status, type(exc).__name__, str(exc))

    # bad parameters, unknown routes, and crashes still answer in the one
    # stable JSON shape
    @app.exception_handler(StarletteHTTPException)
    async def http_error(request: Request, exc: StarletteHTTPException):
        return _error_response(exc.status_code, "http_error", str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return _error_response(400, "bad_request", str(exc.errors()))

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return _error_response(400, "bad_request", str(exc))

    @app.exception_handler(Exception)
    async def unexpected_error(request: Request, exc: Exception):
        return _error_response(500, type(exc).__name__, str(exc))

    @app.get("/stats")
    def stats():
        return _payload(**engine.stats())

    @app.get("/graph")
    def graph(label: Optional[str] = None):
        labels = [l for l in (label.split(",") if label else []) if l] or None
        snapshot = engine.store.export_graph(labels)
        return _payload(nodes=[node_to_dict(n) for n in snapshot.nodes],
                        edges=[edge_to_dict(e) for e in snapshot.edges])

    @app.get("/node/{node_id}")
    def node_detail(node_id: str):
        node = engine.store.get_node(node_id)
        incident = engine.store.neighbors(node_id)
        community = None
        partitions = engine.store.partitions()
        if partitions and not engine.store.communities_stale:
            community = partitions[0].assignment.get(node_id)
        return _payload(
            node=node_to_dict(node),
            edges=[{"edge": edge_to_dict(e), "neighbor": node_to_dict(n)}
                   for e, n in incident],
            incident_edges=len(incident),
            community=community,
        )

    @app.delete("/node/{node_id}")
    def node_delete(node_id: str):
        receipt = engine.forget(node_id)
        return _payload(receipt=receipt.to_dict())

    @app.post("/ingest")
    async def ingest(request: Request):
        body = await request.json()
        if "record" in body:
            report = engine.ingest_record_payload(body["record"])
            return _payload(reports=[_report_dict(report)])
        if "path" in body:
            path = Path(body["path"])
            if path.is_dir():
                reports, stats_ = engine.ingest_directory(path)
            else:
                report = engine.ingest_file(path)
                reports = [report] if report else []
                stats_ = batch_stats(reports)
            return _payload(reports=[_report_dict(r) for r in reports],
                            stats={"count": stats_.count, "mean_ms": stats_.mean_ms,
                                   "p50_ms": stats_.p50_ms, "p95_ms": stats_.p95_ms,
                                   "undefined": stats_.undefined})
        return _error_response(400, "bad_request", "body needs 'record' or 'path'")

    @app.post("/query")
    async def query(request: Request):
        body = await request.json()
        question = body.get("question", "")
        if not question.strip():
            return _error_response(400, "bad_request", "question must be non-empty")
        result = engine.query(
            question,
            n_hops=body.get("n_hops"),
            k_anchors=body.get("k_anchors"),
            max_nodes=body.get("max_nodes"),
            min_similarity=body.get("min_similarity"),
            include_communities=body.get("include_communities"),
        )
        return _payload(answer=_answer_dict(result.answer),
                        subgraph=_subgraph_dict(result.subgraph),
                        retrieval_ms=result.retrieval_ms,
                        generation_ms=result.generation_ms)

    @app.get("/communities")
    def communities(level: Optional[int] = None):
        partitions = engine.communities(level)
        return _payload(partitions=[
            {"level": p.level, "assignment": dict(sorted(p.assignment.items())),
             "quality": p.quality} for p in partitions])

    @app.post("/export")
    async def export(request: Request):
        body = await request.json() if await request.body() else {}
        if body.get("path"):
            lines = export_portable(engine.store, body["path"])
            return _payload(written=body["path"], lines=lines)
        return _payload(ndjson=export_text(engine.store))

    @app.post("/import")
    async def import_(request: Request):
        body = await request.json()
        if body.get("path"):
            count = import_portable(engine.store, body["path"])
        elif body.get("ndjson") is not None:
            count = import_lines(engine.store, body["ndjson"].splitlines())
        else:
            return _error_response(400, "bad_request", "body needs 'path' or 'ndjson'")
        return _payload(imported=count)

    ui_dir = engine.config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        # serve the curation frontend same-origin; API routes keep precedence
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(config: ServiceConfig) -> None:
    """Open the store, bind (loopback unless overridden), serve until stopped."""
    import uvicorn

    config.check_bind()
    engine = Engine(config)
    app = create_app(engine)
    try:
        uvicorn.run(app, host=config.bind_host, port=config.port, log_level="warning")
    finally:
        engine.close()
