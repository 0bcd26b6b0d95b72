"""Shared HTTP plumbing for the two clients.

Both clients work against anything that quacks like an httpx.Client, so
tests and simulations can hand them an in-process ASGI test client instead
of a socket connection.
"""

from __future__ import annotations

import base64
import json
import os
from pathlib import Path

import httpx

from ..errors import (
    AuthorizationError,
    ConflictError,
    MalformedInput,
    NotFound,
    SealShareError,
)

MAX_INLINE_BLOB = 8 * 1024 * 1024
_CHUNK = 4 * 1024 * 1024

_STATUS_ERRORS = {
    401: AuthorizationError,
    403: AuthorizationError,
    404: NotFound,
    409: ConflictError,
    422: MalformedInput,
}


class ServerError(SealShareError):
    pass


class Api:
    def __init__(self, http: httpx.Client, token: str | None = None):
        self.http = http
        self.token = token

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def _handle(self, response: httpx.Response):
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise _STATUS_ERRORS.get(response.status_code, ServerError)(
                f"server returned {response.status_code}: {detail}")
        return response

    def get(self, path: str, **params) -> dict:
        clean = {k: v for k, v in params.items() if v is not None}
        return self._handle(self.http.get(path, params=clean,
                                          headers=self._headers())).json()

    def post(self, path: str, body: dict | None = None) -> dict:
        return self._handle(self.http.post(path, json=body or {},
                                           headers=self._headers())).json()

    def get_blob(self, ref: str) -> bytes:
        return self._handle(self.http.get(f"/blobs/{ref}",
                                          headers=self._headers())).content

    def upload_blob(self, blob: bytes) -> str:
        """Chunked binary upload; returns the server-side blob ref."""
        started = self.post("/uploads", {"total_size": len(blob)})
        upload_id = started["upload_id"]
        for i in range(0, len(blob), _CHUNK):
            self._handle(self.http.put(
                f"/uploads/{upload_id}/chunks/{i // _CHUNK}",
                content=blob[i:i + _CHUNK], headers=self._headers()))
        return self.post(f"/uploads/{upload_id}/finish")["blob_ref"]

    def blob_or_ref(self, blob: bytes) -> dict:
        """Inline base64 for small blobs, chunked upload + ref for large ones."""
        if len(blob) <= MAX_INLINE_BLOB:
            return {"inline": base64.b64encode(blob).decode()}
        return {"ref": self.upload_blob(blob)}


def load_config(home: str | Path) -> dict:
    path = Path(home) / "config.json"
    if not path.exists():
        raise NotFound(f"no client config at {path}; run init first")
    return json.loads(path.read_text())


def save_config(home: str | Path, config: dict) -> None:
    home = Path(home)
    home.mkdir(parents=True, exist_ok=True)
    path = home / "config.json"
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(config, indent=2))
    os.replace(tmp, path)


def passphrase_from_env(explicit: str | None = None) -> str | None:
    if explicit is not None:
        return explicit
    return os.environ.get("SEALSHARE_PASSPHRASE")


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def unb64(text: str) -> bytes:
    return base64.b64decode(text)
