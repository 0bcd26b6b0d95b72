"""Patient-side workflows: key custody, ingestion, consent decisions.

The patient is the only party that ever holds decryption material. The
client maps result-vector positions to filenames with its local manifest;
the proxy never learns what a result vector means.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
from dataclasses import dataclass
from pathlib import Path

import httpx
import numpy as np

from .. import fhe, indexer, pre
from ..errors import ConflictError, MalformedInput, NotFound, RebuildRequired
from ..fhe import containers
from ..pre import group
from . import common, keystore

logger = logging.getLogger("sealshare.patient")

DEFAULT_VOCABULARY_SIZE = 32


@dataclass
class ReviewReport:
    request_id: str
    practitioner_id: str
    submitted_at: str
    matched: list[tuple[str, str]]  # (doc_id, filename)

    def lines(self) -> list[str]:
        head = (f"request {self.request_id} from {self.practitioner_id} "
                f"at {self.submitted_at}")
        if not self.matched:
            return [head, "  no documents matched"]
        return [head] + [f"  [{doc_id}] {name}" for doc_id, name in self.matched]


class PatientClient:
    def __init__(self, home: str | Path, http: httpx.Client, passphrase: str):
        self.home = Path(home)
        config = common.load_config(self.home)
        self.patient_id = config["patient_id"]
        self.profile = config["profile"]
        self.api = common.Api(http, token=config["token"])
        self._unlock(passphrase)
        self.manifest = indexer.load_manifest(self.home / "manifest.txt")
        self.annotations = self._load_annotations()

    # ------------------------------------------------------------------ init

    @staticmethod
    def init(home: str | Path, http: httpx.Client, patient_id: str, passphrase: str,
             vocabulary: list[str], profile: str = "standard-128",
             seed: int | None = None, overwrite: bool = False) -> "PatientClient":
        """Generate keys, register with the proxy, persist local state."""
        home = Path(home)
        ks_path = home / "keystore.bin"
        if ks_path.exists() and not overwrite:
            raise ConflictError(f"keystore already exists at {ks_path}; "
                                f"pass overwrite to replace it")
        home.mkdir(parents=True, exist_ok=True)

        pair = pre.generate_keypair()
        keys = fhe.generate_keys(profile, seed=seed)
        vocabulary = [indexer.normalize_keyword(w) for w in vocabulary]

        api = common.Api(http)
        enc_blob = containers.serialize_enc_key(keys.enc_key)
        eval_blob = containers.serialize_eval_key(keys.eval_key)
        body = {
            "patient_id": patient_id,
            "pre_public": common.b64(pre.public_to_bytes(pair.public)),
            "fhe_enc_key": common.b64(enc_blob),
            "fhe_eval_key": common.b64(eval_blob),
        }
        registered = api.post("/patients", body)

        keystore.save_keystore(ks_path, passphrase, {
            "kind": "patient",
            "pre_secret": group.scalar_to_bytes(pair.secret).hex(),
            "fhe_dec_key": keystore.b64(containers.serialize_dec_key(keys.dec_key)),
            "fhe_enc_key": keystore.b64(enc_blob),
        }, overwrite=overwrite)
        indexer.save_manifest(indexer.DocumentManifest(vocabulary=vocabulary),
                              home / "manifest.txt")
        (home / "annotations.tsv").write_text("")
        common.save_config(home, {
            "kind": "patient",
            "patient_id": patient_id,
            "token": registered["token"],
            "profile": profile,
        })
        return PatientClient(home, http, passphrase)

    def _unlock(self, passphrase: str) -> None:
        payload = keystore.load_keystore(self.home / "keystore.bin", passphrase)
        if payload.get("kind") != "patient":
            raise MalformedInput("keystore does not belong to a patient")
        self.pre_secret = int.from_bytes(bytes.fromhex(payload["pre_secret"]), "big")
        self.pre_public = pre.derive_public(self.pre_secret)
        dec_blob = keystore.unb64(payload["fhe_dec_key"])
        self.dec_key = containers.deserialize_dec_key(dec_blob)
        self.enc_key = containers.deserialize_enc_key(keystore.unb64(payload["fhe_enc_key"]))
        # secret-keyed doc ids: the proxy must not be able to confirm a
        # guessed document by hashing its contents
        self._doc_id_key = hashlib.sha256(b"doc-id-key\x00" + dec_blob).digest()

    def _doc_id(self, content_digest: str) -> str:
        mac = hmac.new(self._doc_id_key, content_digest.encode(), hashlib.sha256)
        return f"doc-{mac.hexdigest()[:16]}"

    # ------------------------------------------------------------- ingestion

    def _load_annotations(self) -> dict[str, set[str]]:
        path = self.home / "annotations.tsv"
        out: dict[str, set[str]] = {}
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line:
                    continue
                doc_id, *words = line.split("\t")
                out[doc_id] = set(words)
        return out

    def _save_annotations(self) -> None:
        lines = [f"{doc_id}\t" + "\t".join(sorted(words))
                 for doc_id, words in sorted(self.annotations.items())]
        (self.home / "annotations.tsv").write_text("\n".join(lines) + "\n",
                                                   encoding="utf-8")

    def ingest(self, paths: list[str | Path],
               rng: np.random.Generator | None = None) -> dict:
        """Seal, index, and upload a batch of annotated files atomically.

        Each path needs a `<path>.keywords` sidecar (one keyword per line).
        Local manifest changes roll back if the upload fails.
        """
        paths = [Path(p) for p in paths]
        staged = []
        for path in paths:
            sidecar = path.with_name(path.name + ".keywords")
            if not sidecar.exists():
                raise NotFound(f"annotation sidecar {sidecar} not found")
            data = path.read_bytes()
            words, digest = indexer.extract_keywords(
                data, indexer.read_sidecar(str(sidecar)))
            staged.append((path, data, words, digest))

        saved_entries = [e for e in self.manifest.entries]
        saved_annotations = {k: set(v) for k, v in self.annotations.items()}
        batch = []
        try:
            for path, data, words, digest in staged:
                doc_id = self._doc_id(digest)
                indexer.add_document(self.manifest, doc_id, path.name, words)
                self.annotations[doc_id] = words
                sealed = pre.seal(data, self.pre_public)
                sealed_name = pre.seal(path.name.encode("utf-8"), self.pre_public)
                batch.append({
                    "doc_id": doc_id,
                    "dem": sealed.dem_ciphertext,
                    "capsule": sealed.capsule.to_bytes(),
                    "name_dem": sealed_name.dem_ciphertext,
                    "name_capsule": sealed_name.capsule.to_bytes(),
                })
            plain = indexer.build_index(self.manifest, self.annotations)
            index_blob = containers.serialize_index(
                fhe.encrypt_index(plain, self.enc_key, rng))

            docs_body = []
            for item in batch:
                dem = self.api.blob_or_ref(item["dem"])
                docs_body.append({
                    "doc_id": item["doc_id"],
                    "dem": dem.get("inline"),
                    "dem_ref": dem.get("ref"),
                    "capsule": common.b64(item["capsule"]),
                    "name_dem": common.b64(item["name_dem"]),
                    "name_capsule": common.b64(item["name_capsule"]),
                })
            index_part = self.api.blob_or_ref(index_blob)
            response = self.api.post(f"/patients/{self.patient_id}/documents", {
                "docs": docs_body,
                "index": index_part.get("inline"),
                "index_ref": index_part.get("ref"),
            })
        except RebuildRequired:
            self.manifest.entries = saved_entries
            self.annotations = saved_annotations
            raise
        except Exception:
            self.manifest.entries = saved_entries
            self.annotations = saved_annotations
            raise

        indexer.save_manifest(self.manifest, self.home / "manifest.txt")
        self._save_annotations()
        return {"uploaded": len(batch), "file_count": response["file_count"]}

    # ---------------------------------------------------------------- consent

    def pending(self) -> list[dict]:
        return self.api.get("/requests/pending")["pending"]

    def review(self, request_id: str) -> ReviewReport:
        """Decrypt the result vector and map set bits through the manifest."""
        view = self.api.get(f"/requests/{request_id}")
        if "result" not in view:
            raise MalformedInput(f"request {request_id} has no result to review "
                                 f"(status {view['status']})")
        result = containers.deserialize_result(common.unb64(view["result"]))
        bits = fhe.decrypt_result(result, self.dec_key)
        matched = []
        for column, bit in enumerate(bits):
            if bit:
                entry = self.manifest.entry_for_column(column)
                matched.append((entry.doc_id, entry.filename))
        return ReviewReport(
            request_id=request_id,
            practitioner_id=view["practitioner_id"],
            submitted_at=view["timestamps"]["SUBMITTED"],
            matched=matched,
        )

    def grant(self, request_id: str, doc_ids: list[str],
              allow_unmatched: bool = False) -> dict:
        """Grant access; builds the re-encryption key from the practitioner's
        *public* key only, and never transmits any secret."""
        report = self.review(request_id)
        matched_ids = {doc_id for doc_id, _ in report.matched}
        unmatched = sorted(set(doc_ids) - matched_ids)
        if unmatched and not allow_unmatched:
            raise MalformedInput(
                f"documents {unmatched} were not matched by this request; "
                f"pass allow_unmatched to grant them deliberately")
        if unmatched:
            logger.warning("granting unmatched documents %s on %s (override)",
                           unmatched, request_id)
        practitioner = self.api.get(
            f"/practitioners/{report.practitioner_id}/keys")
        prac_public = pre.public_from_bytes(common.unb64(practitioner["pre_public"]))
        rekey = pre.generate_rekey(self.pre_secret, prac_public,
                                   self.patient_id, report.practitioner_id)
        return self.api.post(f"/requests/{request_id}/grant", {
            "granted_docs": doc_ids,
            "rekey": common.b64(rekey.to_bytes()),
        })

    def decline(self, request_id: str) -> dict:
        return self.api.post(f"/requests/{request_id}/decline", {})

    def revoke(self, request_id: str | None = None,
               practitioner_id: str | None = None) -> dict:
        return self.api.post("/revocations", {
            "request_id": request_id,
            "practitioner_id": practitioner_id,
        })

    def documents(self) -> list[dict]:
        return [{"doc_id": e.doc_id, "filename": e.filename, "column": e.column}
                for e in self.manifest.entries]

    def grants(self) -> list[dict]:
        rows = self.api.get("/requests", patient=self.patient_id)["requests"]
        return [r for r in rows if r["status"] in ("GRANTED", "FULFILLED")]
