"""Proxy service logic, independent of the HTTP layer.

The proxy stores only ciphertext blobs and plaintext coordination facts
(principal ids, counts, statuses, timestamps, sizes). It can evaluate
searches with evaluation keys and transform capsules with re-encryption
keys, but holds no decryption material of any kind; the API schemas refuse
containers of the decryption-key kind outright.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import secrets
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .. import fhe
from ..errors import (
    AuthorizationError,
    ConflictError,
    KeyMismatch,
    MalformedInput,
    NotFound,
)
from ..fhe import containers
from ..pre import Capsule, ReEncryptionKey, public_from_bytes, reencrypt, verify_transform
from .state import Status, check_transition
from .storage import BlobStore, MetaStore

logger = logging.getLogger("sealshare.server")

MAX_SEARCH_RETRIES = 3


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _token_hash(token: str) -> str:
    return hashlib.sha256(token.encode()).hexdigest()


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except Exception as exc:
        raise MalformedInput("invalid base64 payload") from exc


# ------------------------------------------------------------ event appliers

def _apply_register_patient(state, d):
    state.setdefault("patients", {})[d["patient_id"]] = {
        "pre_public": d["pre_public"],
        "enc_key_ref": d["enc_key_ref"],
        "eval_key_ref": d["eval_key_ref"],
        "enc_fingerprint": d["enc_fingerprint"],
        "index_ref": None,
        "index_f": None,
        "docs": {},
        "doc_order": [],
        "token_hash": d["token_hash"],
    }


def _apply_register_practitioner(state, d):
    state.setdefault("practitioners", {})[d["practitioner_id"]] = {
        "pre_public": d["pre_public"],
        "token_hash": d["token_hash"],
    }


def _apply_upload_documents(state, d):
    patient = state["patients"][d["patient_id"]]
    for doc in d["docs"]:
        patient["docs"][doc["doc_id"]] = {
            "dem_ref": doc["dem_ref"],
            "capsule_ref": doc["capsule_ref"],
            "name_dem_ref": doc["name_dem_ref"],
            "name_capsule_ref": doc["name_capsule_ref"],
            "dem_size": doc["dem_size"],
        }
        patient["doc_order"].append(doc["doc_id"])
    patient["index_ref"] = d["index_ref"]
    patient["index_f"] = d["index_f"]


def _apply_replace_index(state, d):
    patient = state["patients"][d["patient_id"]]
    patient["index_ref"] = d["index_ref"]
    patient["index_f"] = d["index_f"]


def _apply_create_request(state, d):
    state.setdefault("requests", {})[d["request_id"]] = {
        "request_id": d["request_id"],
        "patient_id": d["patient_id"],
        "practitioner_id": d["practitioner_id"],
        "query_ref": d["query_ref"],
        "result_ref": None,
        "status": Status.SUBMITTED.value,
        "retries": 0,
        "granted_docs": [],
        "timestamps": {Status.SUBMITTED.value: d["ts"]},
        "mono": {Status.SUBMITTED.value: d["mono"]},
    }
    state.setdefault("seq", {})["request"] = d["seq"]


def _apply_request_status(state, d):
    req = state["requests"][d["request_id"]]
    req["status"] = d["status"]
    req["timestamps"][d["status"]] = d["ts"]
    req["mono"][d["status"]] = d["mono"]
    if "retries" in d:
        req["retries"] = d["retries"]
    if "result_ref" in d:
        req["result_ref"] = d["result_ref"]
    if "granted_docs" in d:
        req["granted_docs"] = d["granted_docs"]


def _apply_store_grant(state, d):
    state.setdefault("grants", {})[d["request_id"]] = {
        "request_id": d["request_id"],
        "patient_id": d["patient_id"],
        "practitioner_id": d["practitioner_id"],
        "rekey_ref": d["rekey_ref"],
        "granted_docs": d["granted_docs"],
        "revoked": False,
        "transforms": {},
    }


def _apply_set_transforms(state, d):
    state["grants"][d["request_id"]]["transforms"] = d["transforms"]


def _apply_revoke_grant(state, d):
    grant = state["grants"][d["request_id"]]
    grant["revoked"] = True
    grant["rekey_ref"] = None
    grant["transforms"] = {}


def _apply_idempotency(state, d):
    state.setdefault("idempotency", {})[d["key"]] = d["response"]


_APPLIERS = {
    "register_patient": _apply_register_patient,
    "register_practitioner": _apply_register_practitioner,
    "upload_documents": _apply_upload_documents,
    "replace_index": _apply_replace_index,
    "create_request": _apply_create_request,
    "request_status": _apply_request_status,
    "store_grant": _apply_store_grant,
    "set_transforms": _apply_set_transforms,
    "revoke_grant": _apply_revoke_grant,
    "idempotency": _apply_idempotency,
}


@dataclass
class ServiceConfig:
    storage_root: str
    profile: str = "test-fast"
    workers: int = 0  # 0 = run searches inline on the submitting thread


class ProxyService:
    def __init__(self, config: ServiceConfig):
        self.config = config
        root = Path(config.storage_root)
        self.blobs = BlobStore(root / "blobs")
        self.meta = MetaStore(root / "meta", _APPLIERS)
        self.profile = fhe.get_profile(config.profile)
        self._patient_search_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._executor = (ThreadPoolExecutor(max_workers=config.workers,
                                             thread_name_prefix="search")
                          if config.workers > 0 else None)

    def close(self) -> None:
        if self._executor:
            self._executor.shutdown(wait=True)
        self.meta.close()

    # ------------------------------------------------------------- helpers

    def _patient(self, patient_id: str) -> dict:
        try:
            return self.meta.state["patients"][patient_id]
        except KeyError:
            raise NotFound(f"unknown patient {patient_id!r}") from None

    def _practitioner(self, practitioner_id: str) -> dict:
        try:
            return self.meta.state["practitioners"][practitioner_id]
        except KeyError:
            raise NotFound(f"unknown practitioner {practitioner_id!r}") from None

    def _request(self, request_id: str) -> dict:
        try:
            return self.meta.state["requests"][request_id]
        except KeyError:
            raise NotFound(f"unknown request {request_id!r}") from None

    def _search_lock(self, patient_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._patient_search_locks.setdefault(patient_id, threading.Lock())

    def _transition(self, request_id: str, target: Status, **extra) -> None:
        with self.meta.lock:
            req = self._request(request_id)
            check_transition(Status(req["status"]), target)
            self.meta.append("request_status", {
                "request_id": request_id, "status": target.value,
                "ts": _now_iso(), "mono": time.monotonic_ns(), **extra,
            })

    def authenticate(self, token: str) -> tuple[str, str]:
        """(kind, principal id) for a bearer token."""
        h = _token_hash(token)
        for pid, rec in self.meta.state.get("patients", {}).items():
            if rec["token_hash"] == h:
                return "patient", pid
        for pid, rec in self.meta.state.get("practitioners", {}).items():
            if rec["token_hash"] == h:
                return "practitioner", pid
        raise AuthorizationError("unknown bearer token")

    def _check_container(self, blob: bytes, expected_kind: int, patient: dict | None,
                         what: str) -> tuple[int, int]:
        """Validate header: kind, profile, and (if given) the patient's key set."""
        profile, fingerprint, k, f, kind = containers.peek_header(blob)
        if kind == containers.KIND_DEC_KEY:
            raise MalformedInput(f"{what}: decryption keys are never accepted")
        if kind != expected_kind:
            raise MalformedInput(f"{what}: wrong container kind {kind}")
        if profile.profile_id != self.profile.profile_id:
            raise MalformedInput(
                f"{what}: profile {profile.name} does not match server profile "
                f"{self.profile.name}")
        if patient is not None and _b64(fingerprint) != patient["enc_fingerprint"]:
            raise KeyMismatch(f"{what}: key fingerprint does not match this patient")
        return k, f

    # --------------------------------------------------------- registration

    def register_patient(self, patient_id: str, pre_public: bytes,
                         fhe_enc_key: bytes, fhe_eval_key: bytes) -> str:
        public_from_bytes(pre_public)  # validates group membership
        _, enc_fp, _, _, _ = containers.peek_header(fhe_enc_key)
        self._check_container(fhe_enc_key, containers.KIND_ENC_KEY, None, "enc key")
        self._check_container(fhe_eval_key, containers.KIND_EVAL_KEY, None, "eval key")
        _, eval_fp, _, _, _ = containers.peek_header(fhe_eval_key)
        if enc_fp != eval_fp:
            raise MalformedInput("enc/eval keys belong to different key sets")
        token = secrets.token_urlsafe(24)
        with self.meta.lock:
            if patient_id in self.meta.state.get("patients", {}):
                raise ConflictError(f"patient {patient_id!r} already registered")
            if patient_id in self.meta.state.get("practitioners", {}):
                raise ConflictError(f"id {patient_id!r} is taken by a practitioner")
            self.meta.append("register_patient", {
                "patient_id": patient_id,
                "pre_public": _b64(pre_public),
                "enc_key_ref": self.blobs.put(fhe_enc_key),
                "eval_key_ref": self.blobs.put(fhe_eval_key),
                "enc_fingerprint": _b64(enc_fp),
                "token_hash": _token_hash(token),
            })
        return token

    def register_practitioner(self, practitioner_id: str, pre_public: bytes) -> str:
        public_from_bytes(pre_public)
        token = secrets.token_urlsafe(24)
        with self.meta.lock:
            if practitioner_id in self.meta.state.get("practitioners", {}):
                raise ConflictError(f"practitioner {practitioner_id!r} already registered")
            if practitioner_id in self.meta.state.get("patients", {}):
                raise ConflictError(f"id {practitioner_id!r} is taken by a patient")
            self.meta.append("register_practitioner", {
                "practitioner_id": practitioner_id,
                "pre_public": _b64(pre_public),
                "token_hash": _token_hash(token),
            })
        return token

    # --------------------------------------------------------------- uploads

    def upload_documents(self, patient_id: str, batch: list[dict],
                         index_blob: bytes) -> dict:
        """Whole-batch atomic: blobs are staged first, one event commits.

        Batch items: doc_id, dem (bytes) or dem_ref (already uploaded),
        capsule, sealed filename dem + capsule.
        """
        with self.meta.lock:
            patient = self._patient(patient_id)
            fresh = {item["doc_id"] for item in batch}
            if len(fresh) != len(batch):
                raise ConflictError("duplicate doc_id inside batch")
            existing = set(patient["docs"])
            clash = fresh & existing
            if clash:
                raise ConflictError(f"doc_ids already uploaded: {sorted(clash)}")
            expected_f = len(existing) + len(batch)
            k, f = self._check_container(index_blob, containers.KIND_INDEX,
                                         patient, "index")
            if f != expected_f:
                raise MalformedInput(
                    f"index has F={f} but patient would have {expected_f} documents")

            docs = []
            for item in batch:
                if "dem_ref" in item and item["dem_ref"]:
                    dem_ref = item["dem_ref"]
                    if not self.blobs.exists(dem_ref):
                        raise NotFound(f"staged blob {dem_ref} not found")
                    dem_size = self.blobs.size(dem_ref)
                else:
                    dem_ref = self.blobs.put(item["dem"])
                    dem_size = len(item["dem"])
                Capsule.from_bytes(item["capsule"])       # parse check
                Capsule.from_bytes(item["name_capsule"])
                docs.append({
                    "doc_id": item["doc_id"],
                    "dem_ref": dem_ref,
                    "dem_size": dem_size,
                    "capsule_ref": self.blobs.put(item["capsule"]),
                    "name_dem_ref": self.blobs.put(item["name_dem"]),
                    "name_capsule_ref": self.blobs.put(item["name_capsule"]),
                })
            self.meta.append("upload_documents", {
                "patient_id": patient_id,
                "docs": docs,
                "index_ref": self.blobs.put(index_blob),
                "index_f": f,
            })
        return {"file_count": f}

    def replace_index(self, patient_id: str, index_blob: bytes) -> dict:
        with self.meta.lock:
            patient = self._patient(patient_id)
            k, f = self._check_container(index_blob, containers.KIND_INDEX,
                                         patient, "index")
            if f != len(patient["docs"]):
                raise MalformedInput(
                    f"index has F={f} but patient has {len(patient['docs'])} documents")
            self.meta.append("replace_index", {
                "patient_id": patient_id,
                "index_ref": self.blobs.put(index_blob),
                "index_f": f,
            })
        return {"file_count": f}

    # ---------------------------------------------------------------- search

    def submit_search(self, practitioner_id: str, patient_id: str,
                      query_blob: bytes) -> str:
        self._practitioner(practitioner_id)
        with self.meta.lock:
            patient = self._patient(patient_id)
            self._check_container(query_blob, containers.KIND_QUERY, patient, "query")
            query = containers.deserialize_query(query_blob)
            fhe.circuits.validate_query_shape(query.ast)
            seq = self.meta.state.get("seq", {}).get("request", 0) + 1
            request_id = f"req-{seq:06d}"
            self.meta.append("create_request", {
                "request_id": request_id,
                "patient_id": patient_id,
                "practitioner_id": practitioner_id,
                "query_ref": self.blobs.put(query_blob),
                "ts": _now_iso(), "mono": time.monotonic_ns(),
                "seq": seq,
            })
        if self._executor is not None:
            self._executor.submit(self._run_search_safely, request_id)
        else:
            self._run_search_safely(request_id)
        return request_id

    def _run_search_safely(self, request_id: str) -> None:
        try:
            self.run_search(request_id)
        except Exception:
            logger.exception("search for %s failed outside the retry path", request_id)

    def run_search(self, request_id: str) -> dict:
        """Claim SUBMITTED -> SEARCHING, evaluate, -> AWAITING_CONSENT.

        Failures retry up to MAX_SEARCH_RETRIES, then park in FAILED. The
        server logs gate counts only; it never sees a decrypted value (it
        holds no decryption key, structurally).
        """
        self._transition(request_id, Status.SEARCHING)
        req = self._request(request_id)
        patient = self._patient(req["patient_id"])
        try:
            with self._search_lock(req["patient_id"]):
                result_blob, gate_counts = self._evaluate(patient, req)
            result_ref = self.blobs.put(result_blob)
            self._transition(request_id, Status.AWAITING_CONSENT, result_ref=result_ref)
            logger.info("search %s done; gates=%s", request_id, gate_counts)
            return self._request(request_id)
        except Exception as exc:
            retries = req["retries"] + 1
            if retries >= MAX_SEARCH_RETRIES:
                self._transition(request_id, Status.FAILED, retries=retries)
                logger.error("search %s failed terminally: %s", request_id, exc)
            else:
                self._transition(request_id, Status.SUBMITTED, retries=retries)
                logger.warning("search %s failed (retry %d): %s", request_id, retries, exc)
            raise

    def _evaluate(self, patient: dict, req: dict) -> tuple[bytes, dict]:
        if patient["index_ref"] is None or patient["index_f"] == 0:
            enc_key = containers.deserialize_enc_key(self.blobs.get(patient["enc_key_ref"]))
            result = fhe.empty_result(enc_key)
            return containers.serialize_result(result), {}
        index = containers.deserialize_index(self.blobs.get(patient["index_ref"]))
        query = containers.deserialize_query(self.blobs.get(req["query_ref"]))
        eval_key = containers.deserialize_eval_key(self.blobs.get(patient["eval_key_ref"]))
        evaluator = eval_key.evaluator()
        result = fhe.eval_query(query, index, eval_key, evaluator)
        return containers.serialize_result(result), dict(evaluator.gate_counts)

    # ---------------------------------------------------------------- consent

    def fetch_pending(self, patient_id: str) -> list[dict]:
        self._patient(patient_id)
        pending = [r for r in self.meta.state.get("requests", {}).values()
                   if r["patient_id"] == patient_id
                   and r["status"] == Status.AWAITING_CONSENT.value]
        pending.sort(key=lambda r: r["mono"][Status.SUBMITTED.value])
        return [{
            "request_id": r["request_id"],
            "practitioner_id": r["practitioner_id"],
            "submitted_at": r["timestamps"][Status.SUBMITTED.value],
            "result": _b64(self.blobs.get(r["result_ref"])),
        } for r in pending]

    def _idempotent(self, key: str | None):
        if key is None:
            return None
        return self.meta.state.get("idempotency", {}).get(key)

    def _remember(self, key: str | None, response: dict) -> dict:
        if key is not None:
            self.meta.append("idempotency", {"key": key, "response": response})
        return response

    def grant(self, patient_id: str, request_id: str, granted_docs: list[str],
              rekey_blob: bytes, idempotency_key: str | None = None) -> dict:
        cached = self._idempotent(idempotency_key)
        if cached is not None:
            return cached
        patient = self._patient(patient_id)
        rekey = ReEncryptionKey.from_bytes(rekey_blob)

        with self.meta.lock:
            req = self._request(request_id)
            if req["patient_id"] != patient_id:
                raise AuthorizationError("request belongs to a different patient")
            if not granted_docs:
                raise MalformedInput(
                    "grant with zero documents is forbidden; decline instead")
            unknown = sorted(set(granted_docs) - set(patient["docs"]))
            if unknown:
                raise MalformedInput(f"granted_docs outside patient's set: {unknown}")
            practitioner = self._practitioner(req["practitioner_id"])
            if rekey.delegator_public != public_from_bytes(_unb64(patient["pre_public"])):
                raise MalformedInput("rekey delegator is not this patient")
            if rekey.delegatee_public != public_from_bytes(_unb64(practitioner["pre_public"])):
                raise MalformedInput("rekey delegatee is not the requesting practitioner")
            if rekey.delegator_id != patient_id or rekey.delegatee_id != req["practitioner_id"]:
                raise MalformedInput("rekey principal ids do not match the request")

            self._transition(request_id, Status.GRANTED, granted_docs=sorted(granted_docs))
            self.meta.append("store_grant", {
                "request_id": request_id,
                "patient_id": patient_id,
                "practitioner_id": req["practitioner_id"],
                "rekey_ref": self.blobs.put(rekey_blob),
                "granted_docs": sorted(granted_docs),
            })

        # Eager re-encryption: revocation then reduces to deleting material.
        delegator_pub = public_from_bytes(_unb64(patient["pre_public"]))
        delegatee_pub = public_from_bytes(_unb64(practitioner["pre_public"]))
        transforms = {}
        for doc_id in sorted(granted_docs):
            doc = patient["docs"][doc_id]
            entry = {}
            for label, capsule_ref in (("content", doc["capsule_ref"]),
                                       ("name", doc["name_capsule_ref"])):
                capsule = Capsule.from_bytes(self.blobs.get(capsule_ref))
                tc = reencrypt(capsule, rekey)
                verify_transform(tc, delegator_pub, delegatee_pub,
                                 patient_id, req["practitioner_id"])
                entry[f"{label}_tc_ref"] = self.blobs.put(tc.to_bytes())
            transforms[doc_id] = entry

        with self.meta.lock:
            self.meta.append("set_transforms", {"request_id": request_id,
                                                "transforms": transforms})
            self._transition(request_id, Status.FULFILLED)
        return self._remember(idempotency_key,
                              {"request_id": request_id, "status": Status.FULFILLED.value,
                               "granted": len(granted_docs)})

    def decline(self, patient_id: str, request_id: str,
                idempotency_key: str | None = None) -> dict:
        cached = self._idempotent(idempotency_key)
        if cached is not None:
            return cached
        with self.meta.lock:
            req = self._request(request_id)
            if req["patient_id"] != patient_id:
                raise AuthorizationError("request belongs to a different patient")
            # query/result blobs are retained for audit; no rekey is ever stored
            self._transition(request_id, Status.DECLINED)
        return self._remember(idempotency_key,
                              {"request_id": request_id, "status": Status.DECLINED.value})

    def download(self, practitioner_id: str, request_id: str) -> list[dict]:
        req = self._request(request_id)
        if req["practitioner_id"] != practitioner_id:
            raise AuthorizationError("request belongs to a different practitioner")
        if req["status"] == Status.REVOKED.value:
            raise AuthorizationError("grant was revoked")
        if req["status"] != Status.FULFILLED.value:
            raise AuthorizationError(f"request is {req['status']}, not FULFILLED")
        grant = self.meta.state.get("grants", {}).get(request_id)
        if grant is None or grant["revoked"]:
            raise AuthorizationError("no active grant for this request")
        patient = self._patient(req["patient_id"])
        out = []
        for doc_id in grant["granted_docs"]:
            doc = patient["docs"][doc_id]
            transforms = grant["transforms"][doc_id]
            out.append({
                "doc_id": doc_id,
                "content_dem_ref": doc["dem_ref"],
                "content_dem_size": doc["dem_size"],
                "content_tc": _b64(self.blobs.get(transforms["content_tc_ref"])),
                "name_dem": _b64(self.blobs.get(doc["name_dem_ref"])),
                "name_tc": _b64(self.blobs.get(transforms["name_tc_ref"])),
            })
        return out

    def revoke(self, patient_id: str, request_id: str | None = None,
               practitioner_id: str | None = None,
               idempotency_key: str | None = None) -> dict:
        """Revoke matching grants: delete rekeys and cached transforms.

        Idempotent; revoking again yields count 0.
        """
        cached = self._idempotent(idempotency_key)
        if cached is not None:
            return cached
        if (request_id is None) == (practitioner_id is None):
            raise MalformedInput("scope must be exactly one of request_id / practitioner_id")
        count = 0
        with self.meta.lock:
            self._patient(patient_id)
            for grant in list(self.meta.state.get("grants", {}).values()):
                if grant["patient_id"] != patient_id or grant["revoked"]:
                    continue
                if request_id is not None and grant["request_id"] != request_id:
                    continue
                if practitioner_id is not None and grant["practitioner_id"] != practitioner_id:
                    continue
                refs = [grant["rekey_ref"]]
                refs += [t[key] for t in grant["transforms"].values() for key in t]
                self._transition(grant["request_id"], Status.REVOKED)
                self.meta.append("revoke_grant", {"request_id": grant["request_id"]})
                for ref in refs:
                    if ref:
                        self.blobs.delete(ref)
                count += 1
        return self._remember(idempotency_key, {"revoked": count})

    # ------------------------------------------------------------------ views

    def request_view(self, request_id: str, viewer_kind: str, viewer_id: str) -> dict:
        req = self._request(request_id)
        if viewer_kind == "patient" and req["patient_id"] != viewer_id:
            raise AuthorizationError("not your request")
        if viewer_kind == "practitioner" and req["practitioner_id"] != viewer_id:
            raise AuthorizationError("not your request")
        view = {
            "request_id": req["request_id"],
            "patient_id": req["patient_id"],
            "practitioner_id": req["practitioner_id"],
            "status": req["status"],
            "timestamps": dict(req["timestamps"]),
            "granted_docs": list(req["granted_docs"]),
        }
        if viewer_kind == "patient" and req["result_ref"]:
            view["result"] = _b64(self.blobs.get(req["result_ref"]))
        return view

    def list_requests(self, viewer_kind: str, viewer_id: str,
                      patient: str | None = None, status: str | None = None) -> list[dict]:
        if viewer_kind == "patient":
            if patient is not None and patient != viewer_id:
                raise AuthorizationError("patients may only list their own requests")
            patient = viewer_id
        rows = []
        for req in self.meta.state.get("requests", {}).values():
            if viewer_kind == "practitioner" and req["practitioner_id"] != viewer_id:
                continue
            if patient is not None and req["patient_id"] != patient:
                continue
            if status is not None and req["status"] != status:
                continue
            rows.append(req)
        rows.sort(key=lambda r: r["mono"][Status.SUBMITTED.value])
        return [{
            "request_id": r["request_id"],
            "patient_id": r["patient_id"],
            "practitioner_id": r["practitioner_id"],
            "status": r["status"],
            "submitted_at": r["timestamps"][Status.SUBMITTED.value],
        } for r in rows]

    def patient_keys(self, patient_id: str) -> dict:
        patient = self._patient(patient_id)
        return {
            "patient_id": patient_id,
            "pre_public": patient["pre_public"],
            "enc_key_ref": patient["enc_key_ref"],
            "enc_fingerprint": patient["enc_fingerprint"],
            "file_count": len(patient["docs"]),
        }

    def practitioner_keys(self, practitioner_id: str) -> dict:
        practitioner = self._practitioner(practitioner_id)
        return {"practitioner_id": practitioner_id,
                "pre_public": practitioner["pre_public"]}
