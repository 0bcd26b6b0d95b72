"""HTTP surface of the proxy.

JSON bodies carry ciphertext blobs as base64 up to 8 MiB; anything larger
goes through the chunked binary upload endpoints and is referenced by blob
ref. Every response carries an X-Call-Id and the server's monotonic
timestamp. Configuration comes from environment variables:

    SEALSHARE_STORAGE_ROOT   persistence root (required for the CLI)
    SEALSHARE_PROFILE        standard-128 | test-fast
    SEALSHARE_WORKERS        search worker pool size (0 = inline)
    SEALSHARE_BIND           host:port for `sealshare server`
"""

from __future__ import annotations

import base64
import hashlib
import secrets
import time
import uuid

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse

from ..errors import (
    AuthorizationError,
    ConflictError,
    KeyMismatch,
    MalformedInput,
    NotFound,
    ProofFailure,
    SealShareError,
    StateTransitionError,
)
from . import schemas
from .service import ProxyService, ServiceConfig

_ERROR_CODES = [
    (AuthorizationError, 403),
    (NotFound, 404),
    (ConflictError, 409),
    (StateTransitionError, 409),
    (KeyMismatch, 422),
    (ProofFailure, 422),
    (MalformedInput, 422),
    (SealShareError, 400),
]


def _http_error(exc: SealShareError) -> HTTPException:
    for klass, code in _ERROR_CODES:
        if isinstance(exc, klass):
            return HTTPException(status_code=code, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


def create_app(service: ProxyService) -> FastAPI:
    app = FastAPI(title="sealshare proxy", version="0.1.0")
    app.state.service = service
    uploads: dict[str, dict] = {}

    @app.middleware("http")
    async def stamp_responses(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Call-Id"] = uuid.uuid4().hex
        response.headers["X-Server-Time-Ns"] = str(time.monotonic_ns())
        return response

    @app.exception_handler(SealShareError)
    async def on_domain_error(request: Request, exc: SealShareError):
        http = _http_error(exc)
        return JSONResponse(status_code=http.status_code,
                            content={"detail": http.detail},
                            headers={"X-Call-Id": uuid.uuid4().hex,
                                     "X-Server-Time-Ns": str(time.monotonic_ns())})

    def principal(authorization: str = Header(default="")) -> tuple[str, str]:
        if not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        try:
            return service.authenticate(authorization[len("Bearer "):])
        except AuthorizationError as exc:
            raise HTTPException(status_code=401, detail=str(exc)) from None

    def require_patient(who: tuple[str, str] = Depends(principal)) -> str:
        kind, pid = who
        if kind != "patient":
            raise HTTPException(status_code=403, detail="patient token required")
        return pid

    def require_practitioner(who: tuple[str, str] = Depends(principal)) -> str:
        kind, pid = who
        if kind != "practitioner":
            raise HTTPException(status_code=403, detail="practitioner token required")
        return pid

    def b64(field: str, value: str) -> bytes:
        try:
            return base64.b64decode(value, validate=True)
        except Exception:
            raise HTTPException(status_code=422, detail=f"{field} is not valid base64")

    # ------------------------------------------------------------ principals

    @app.post("/patients", status_code=201)
    def register_patient(body: schemas.RegisterPatient):
        token = service.register_patient(
            body.patient_id, b64("pre_public", body.pre_public),
            b64("fhe_enc_key", body.fhe_enc_key), b64("fhe_eval_key", body.fhe_eval_key))
        return {"patient_id": body.patient_id, "token": token}

    @app.post("/practitioners", status_code=201)
    def register_practitioner(body: schemas.RegisterPractitioner):
        token = service.register_practitioner(
            body.practitioner_id, b64("pre_public", body.pre_public))
        return {"practitioner_id": body.practitioner_id, "token": token}

    @app.get("/patients/{patient_id}/keys")
    def patient_keys(patient_id: str, who=Depends(principal)):
        return service.patient_keys(patient_id)

    @app.get("/practitioners/{practitioner_id}/keys")
    def practitioner_keys(practitioner_id: str, who=Depends(principal)):
        return service.practitioner_keys(practitioner_id)

    # ------------------------------------------------------------- documents

    def _index_blob(index: str | None, index_ref: str | None) -> bytes:
        if (index is None) == (index_ref is None):
            raise HTTPException(status_code=422,
                                detail="provide exactly one of index / index_ref")
        if index is not None:
            return b64("index", index)
        return service.blobs.get(index_ref)

    @app.post("/patients/{patient_id}/documents")
    def upload_documents(patient_id: str, body: schemas.UploadBatch,
                         caller: str = Depends(require_patient)):
        if caller != patient_id:
            raise HTTPException(status_code=403, detail="not your document store")
        batch = []
        for doc in body.docs:
            if (doc.dem is None) == (doc.dem_ref is None):
                raise HTTPException(status_code=422,
                                    detail=f"doc {doc.doc_id}: exactly one of dem / dem_ref")
            batch.append({
                "doc_id": doc.doc_id,
                "dem": b64("dem", doc.dem) if doc.dem is not None else None,
                "dem_ref": doc.dem_ref,
                "capsule": b64("capsule", doc.capsule),
                "name_dem": b64("name_dem", doc.name_dem),
                "name_capsule": b64("name_capsule", doc.name_capsule),
            })
        return service.upload_documents(patient_id, batch,
                                        _index_blob(body.index, body.index_ref))

    @app.post("/patients/{patient_id}/index")
    def replace_index(patient_id: str, body: schemas.ReplaceIndex,
                      caller: str = Depends(require_patient)):
        if caller != patient_id:
            raise HTTPException(status_code=403, detail="not your index")
        return service.replace_index(patient_id, _index_blob(body.index, body.index_ref))

    # --------------------------------------------------------------- requests

    @app.post("/requests", status_code=201)
    def submit_search(body: schemas.SubmitSearch,
                      caller: str = Depends(require_practitioner)):
        request_id = service.submit_search(caller, body.patient_id, b64("query", body.query))
        return {"request_id": request_id}

    @app.get("/requests")
    def list_requests(who=Depends(principal),
                      patient: str | None = Query(default=None),
                      status: str | None = Query(default=None)):
        kind, pid = who
        return {"requests": service.list_requests(kind, pid, patient, status)}

    @app.get("/requests/pending")
    def pending(caller: str = Depends(require_patient)):
        return {"pending": service.fetch_pending(caller)}

    @app.get("/requests/{request_id}")
    def request_view(request_id: str, who=Depends(principal)):
        kind, pid = who
        return service.request_view(request_id, kind, pid)

    @app.post("/requests/{request_id}/grant")
    def grant(request_id: str, body: schemas.GrantBody,
              caller: str = Depends(require_patient)):
        return service.grant(caller, request_id, body.granted_docs,
                             b64("rekey", body.rekey), body.idempotency_key)

    @app.post("/requests/{request_id}/decline")
    def decline(request_id: str, body: schemas.DeclineBody | None = None,
                caller: str = Depends(require_patient)):
        key = body.idempotency_key if body else None
        return service.decline(caller, request_id, key)

    @app.get("/requests/{request_id}/download")
    def download(request_id: str, caller: str = Depends(require_practitioner)):
        return {"documents": service.download(caller, request_id)}

    @app.post("/revocations")
    def revoke(body: schemas.RevokeBody, caller: str = Depends(require_patient)):
        return service.revoke(caller, body.request_id, body.practitioner_id,
                              body.idempotency_key)

    # ------------------------------------------------------------------ blobs

    @app.get("/blobs/{ref}")
    def get_blob(ref: str, who=Depends(principal)):
        stream = service.blobs.open_stream(ref)

        def iter_chunks():
            with stream:
                while chunk := stream.read(1 << 20):
                    yield chunk

        return StreamingResponse(iter_chunks(), media_type="application/octet-stream")

    @app.post("/uploads", status_code=201)
    def start_upload(body: schemas.ChunkedUploadStart, who=Depends(principal)):
        upload_id = secrets.token_hex(16)
        uploads[upload_id] = {"parts": {}, "total": body.total_size, "owner": who}
        return {"upload_id": upload_id}

    @app.put("/uploads/{upload_id}/chunks/{index}")
    async def put_chunk(upload_id: str, index: int, request: Request,
                        who=Depends(principal)):
        session = uploads.get(upload_id)
        if session is None or session["owner"] != who:
            raise HTTPException(status_code=404, detail="unknown upload session")
        session["parts"][index] = await request.body()
        return {"received": len(session["parts"][index])}

    @app.post("/uploads/{upload_id}/finish")
    def finish_upload(upload_id: str, who=Depends(principal)):
        session = uploads.pop(upload_id, None)
        if session is None or session["owner"] != who:
            raise HTTPException(status_code=404, detail="unknown upload session")
        blob = b"".join(part for _, part in sorted(session["parts"].items()))
        if len(blob) != session["total"]:
            raise HTTPException(status_code=422,
                                detail=f"expected {session['total']} bytes, got {len(blob)}")
        return {"blob_ref": service.blobs.put(blob), "sha256": hashlib.sha256(blob).hexdigest()}

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "profile": service.profile.name}

    return app


def app_from_env() -> FastAPI:
    import os

    config = ServiceConfig(
        storage_root=os.environ.get("SEALSHARE_STORAGE_ROOT", "./proxy-data"),
        profile=os.environ.get("SEALSHARE_PROFILE", "test-fast"),
        workers=int(os.environ.get("SEALSHARE_WORKERS", "0")),
    )
    return create_app(ProxyService(config))
