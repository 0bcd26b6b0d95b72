"""Practitioner-side workflows: query, poll, retrieve.

Practitioners hold only a re-encryption keypair; the patient's encryption
key is fetched per patient and its fingerprint pinned on first use, so a
server swapping keys later is a hard error rather than a silent downgrade.
Query strings never leave this process in plaintext: only encrypted atoms
are transmitted, and only ids appear in logs.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from pathlib import Path

import httpx
import numpy as np

from .. import fhe, pre, queryparse
from ..errors import AuthorizationError, ConflictError, KeyMismatch, MalformedInput
from ..fhe import containers
from ..pre import group
from . import common, keystore

logger = logging.getLogger("sealshare.practitioner")

TERMINAL_STATUSES = {"FULFILLED", "DECLINED", "REVOKED", "FAILED"}


def build_query(expr: str) -> queryparse.Node:
    """Parse a boolean keyword expression (NOT > AND > OR, parens, quotes)."""
    return queryparse.parse(expr)


def sanitize_filename(name: str) -> str:
    """Keep a decrypted filename from escaping the output directory."""
    name = name.replace("\\", "/").split("/")[-1]
    name = re.sub(r"[\x00-\x1f]", "", name).strip()
    if name in ("", ".", ".."):
        name = "unnamed"
    return name


class PractitionerClient:
    def __init__(self, home: str | Path, http: httpx.Client, passphrase: str):
        self.home = Path(home)
        config = common.load_config(self.home)
        self.practitioner_id = config["practitioner_id"]
        self.api = common.Api(http, token=config["token"])
        payload = keystore.load_keystore(self.home / "keystore.bin", passphrase)
        if payload.get("kind") != "practitioner":
            raise MalformedInput("keystore does not belong to a practitioner")
        self.pre_secret = int.from_bytes(bytes.fromhex(payload["pre_secret"]), "big")
        self.pre_public = pre.derive_public(self.pre_secret)

    @staticmethod
    def init(home: str | Path, http: httpx.Client, practitioner_id: str,
             passphrase: str, overwrite: bool = False) -> "PractitionerClient":
        home = Path(home)
        ks_path = home / "keystore.bin"
        if ks_path.exists() and not overwrite:
            raise ConflictError(f"keystore already exists at {ks_path}; "
                                f"pass overwrite to replace it")
        home.mkdir(parents=True, exist_ok=True)
        pair = pre.generate_keypair()
        api = common.Api(http)
        registered = api.post("/practitioners", {
            "practitioner_id": practitioner_id,
            "pre_public": common.b64(pre.public_to_bytes(pair.public)),
        })
        keystore.save_keystore(ks_path, passphrase, {
            "kind": "practitioner",
            "pre_secret": group.scalar_to_bytes(pair.secret).hex(),
        }, overwrite=overwrite)
        common.save_config(home, {
            "kind": "practitioner",
            "practitioner_id": practitioner_id,
            "token": registered["token"],
        })
        (home / "pins.json").write_text("{}")
        return PractitionerClient(home, http, passphrase)

    # ------------------------------------------------------------------ keys

    def _pins(self) -> dict:
        path = self.home / "pins.json"
        return json.loads(path.read_text()) if path.exists() else {}

    def _pin(self, patient_id: str, fingerprint: str) -> None:
        pins = self._pins()
        pins[patient_id] = fingerprint
        tmp = self.home / "pins.json.tmp"
        tmp.write_text(json.dumps(pins, indent=2))
        os.replace(tmp, self.home / "pins.json")

    def fetch_enc_key(self, patient_id: str) -> fhe.EncryptionKey:
        """Fetch and pin the patient's encryption key (trust on first use)."""
        meta = self.api.get(f"/patients/{patient_id}/keys")
        pinned = self._pins().get(patient_id)
        if pinned is not None and pinned != meta["enc_fingerprint"]:
            raise KeyMismatch(
                f"patient {patient_id} key fingerprint changed from the pinned "
                f"value; refusing (possible key substitution)")
        enc_key = containers.deserialize_enc_key(self.api.get_blob(meta["enc_key_ref"]))
        served_fp = common.b64(enc_key.fingerprint)
        if served_fp != meta["enc_fingerprint"]:
            raise KeyMismatch("served key blob does not match its advertised fingerprint")
        if pinned is None:
            self._pin(patient_id, served_fp)
        return enc_key

    # ----------------------------------------------------------------- search

    def submit(self, patient_id: str, ast: queryparse.Node,
               rng: np.random.Generator | None = None) -> str:
        enc_key = self.fetch_enc_key(patient_id)

        def encrypt(node: queryparse.Node) -> fhe.QueryNode:
            if isinstance(node, queryparse.Atom):
                return fhe.QueryLeaf(fhe.encrypt_query_atom(node.keyword, enc_key, rng))
            if isinstance(node, queryparse.Not):
                return fhe.QueryNot(encrypt(node.child))
            op = "and" if isinstance(node, queryparse.And) else "or"
            return fhe.QueryOp(op, encrypt(node.lhs), encrypt(node.rhs))

        query = fhe.EncryptedQuery(enc_key.profile, enc_key.fingerprint, encrypt(ast))
        blob = containers.serialize_query(query)
        response = self.api.post("/requests", {
            "patient_id": patient_id,
            "query": common.b64(blob),
        })
        logger.info("submitted request %s", response["request_id"])
        return response["request_id"]

    def status(self, request_id: str) -> dict:
        return self.api.get(f"/requests/{request_id}")

    def poll(self, request_id: str, until: set[str] | None = None,
             base: float = 1.0, cap: float = 30.0,
             budget: float | None = None) -> dict:
        """Poll with exponential backoff until a terminal status (or budget)."""
        until = until or TERMINAL_STATUSES
        delay = base
        start = time.monotonic()
        while True:
            view = self.status(request_id)
            if view["status"] in until:
                return view
            if budget is not None and time.monotonic() - start > budget:
                return view
            time.sleep(delay)
            delay = min(delay * 2, cap)

    # --------------------------------------------------------------- retrieve

    def retrieve(self, request_id: str, out_dir: str | Path) -> list[Path]:
        """Download and decrypt granted documents: filename first, then content.

        A revocation racing the download keeps whatever already landed on
        disk and reports the failure; finished files are never deleted.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        listing = self.api.get(f"/requests/{request_id}/download")["documents"]
        view = self.status(request_id)
        patient_keys = self.api.get(f"/patients/{view['patient_id']}/keys")
        delegator_pub = pre.public_from_bytes(common.unb64(patient_keys["pre_public"]))

        written: list[Path] = []
        failures: list[str] = []
        for item in listing:
            try:
                name_tc = pre.TransformedCapsule.from_bytes(common.unb64(item["name_tc"]))
                raw_name = pre.unseal_reencrypted(
                    common.unb64(item["name_dem"]), name_tc, self.pre_secret,
                    delegator_pub, view["patient_id"], self.practitioner_id)
                filename = sanitize_filename(raw_name.decode("utf-8"))

                content_tc = pre.TransformedCapsule.from_bytes(
                    common.unb64(item["content_tc"]))
                dem = self.api.get_blob(item["content_dem_ref"])
                content = pre.unseal_reencrypted(
                    dem, content_tc, self.pre_secret, delegator_pub,
                    view["patient_id"], self.practitioner_id)

                target = out_dir / filename
                suffix = 2
                while target.exists():
                    target = out_dir / f"{filename}.{suffix}"
                    suffix += 1
                target.write_bytes(content)
                written.append(target)
            except Exception as exc:
                failures.append(f"{item['doc_id']}: {exc}")
        if failures:
            raise AuthorizationError(
                f"retrieved {len(written)} of {len(listing)} documents; "
                f"failures: {'; '.join(failures)}")
        return written
