"""Localhost agent APIs backing the browser console.

All decryption stays in these processes; the browser only ever sees
already-decrypted match metadata from the patient agent, never key
material. Connections from non-loopback addresses are refused outright.

The patient agent serves the console's static bundle when one has been
built (frontend/dist); the practitioner agent is the command endpoint the
console's workbench delegates submit/status/retrieve to.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, ConfigDict

from ..errors import SealShareError
from ..queryparse import ParseError, parse, render, to_json
from .patient import PatientClient
from .practitioner import PractitionerClient

_LOOPBACK = {"127.0.0.1", "::1", "localhost", "testclient"}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GrantBody(_Strict):
    request_id: str
    doc_ids: list[str]
    allow_unmatched: bool = False


class DeclineBody(_Strict):
    request_id: str


class RevokeBody(_Strict):
    request_id: str | None = None
    practitioner_id: str | None = None


class SubmitBody(_Strict):
    patient_id: str
    expression: str


class ParseBody(_Strict):
    expression: str


class RetrieveBody(_Strict):
    request_id: str
    out_dir: str


def _guard_loopback(app: FastAPI) -> None:
    @app.middleware("http")
    async def loopback_only(request: Request, call_next):
        client = request.client
        if client is not None and client.host not in _LOOPBACK:
            return JSONResponse(status_code=403,
                                content={"detail": "agent accepts loopback connections only"})
        return await call_next(request)

    @app.exception_handler(SealShareError)
    async def on_error(request: Request, exc: SealShareError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})


def _mount_console(app: FastAPI, dist: Path) -> None:
    @app.get("/")
    def console_index():
        return FileResponse(dist / "index.html")

    @app.get("/assets/{name}")
    def console_asset(name: str):
        target = (dist / "assets" / name).resolve()
        if not str(target).startswith(str((dist / "assets").resolve())) or not target.exists():
            return JSONResponse(status_code=404, content={"detail": "asset not found"})
        return FileResponse(target)


def create_patient_agent(client: PatientClient, proxy_url: str = "",
                         console_dist: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sealshare patient agent")
    _guard_loopback(app)

    @app.get("/config")
    def config():
        return {"mode": "patient", "principal": client.patient_id, "proxy": proxy_url}

    @app.get("/pending")
    def pending():
        out = []
        for row in client.pending():
            report = client.review(row["request_id"])
            out.append({
                "request_id": report.request_id,
                "practitioner_id": report.practitioner_id,
                "submitted_at": report.submitted_at,
                "matched": [{"doc_id": d, "filename": f} for d, f in report.matched],
            })
        return {"pending": out}

    @app.post("/grant")
    def grant(body: GrantBody):
        return client.grant(body.request_id, body.doc_ids, body.allow_unmatched)

    @app.post("/decline")
    def decline(body: DeclineBody):
        return client.decline(body.request_id)

    @app.post("/revoke")
    def revoke(body: RevokeBody):
        return client.revoke(body.request_id, body.practitioner_id)

    @app.get("/documents")
    def documents():
        return {"documents": client.documents()}

    @app.get("/grants")
    def grants():
        return {"grants": client.grants()}

    if console_dist is not None and Path(console_dist).exists():
        _mount_console(app, Path(console_dist))
    return app


def create_practitioner_agent(client: PractitionerClient, proxy_url: str = "",
                              console_dist: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sealshare practitioner agent")
    _guard_loopback(app)

    @app.get("/config")
    def config():
        return {"mode": "practitioner", "principal": client.practitioner_id,
                "proxy": proxy_url}

    @app.post("/parse")
    def parse_expression(body: ParseBody):
        try:
            ast = parse(body.expression)
        except ParseError as exc:
            return JSONResponse(status_code=422, content={
                "detail": str(exc), "position": exc.position})
        return {"ast": to_json(ast), "rendered": render(ast)}

    @app.post("/submit")
    def submit(body: SubmitBody):
        ast = parse(body.expression)
        return {"request_id": client.submit(body.patient_id, ast)}

    @app.get("/requests")
    def requests():
        return {"requests": client.api.get("/requests")["requests"]}

    @app.get("/requests/{request_id}")
    def request_status(request_id: str):
        return client.status(request_id)

    @app.post("/retrieve")
    def retrieve(body: RetrieveBody):
        files = client.retrieve(body.request_id, body.out_dir)
        return {"files": [str(p) for p in files]}

    if console_dist is not None and Path(console_dist).exists():
        _mount_console(app, Path(console_dist))
    return app
