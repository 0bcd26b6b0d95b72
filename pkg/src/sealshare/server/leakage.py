"""Machine-readable leakage ledger and persisted-schema audit.

Everything the proxy can read in plaintext is declared here, and the test
suite audits the persisted metadata snapshot against these declarations:
every leaf field must match exactly one audit rule, each rule maps either
to a declared plaintext fact or to an opaque/infrastructure class, and the
set of declared facts is closed. Facts beyond this list are a bug.
"""

from __future__ import annotations

import json
import re

VISIBLE_FACTS = [
    {
        "fact": "file-counts",
        "where": "patients.*.docs / doc_order sizes, index F dimension",
        "why": "the proxy must validate index dimensions against stored blobs",
    },
    {
        "fact": "request-statuses",
        "where": "requests.*.status, grants.*.revoked",
        "why": "the consent lifecycle is coordinated by the proxy",
    },
    {
        "fact": "principal-ids",
        "where": "patients.* / practitioners.* keys, requests.*.patient_id / practitioner_id",
        "why": "routing requests and grants between the two parties",
    },
    {
        "fact": "request-timestamps",
        "where": "requests.*.timestamps / mono, per state transition",
        "why": "ordering pending requests and audit of transitions",
    },
    {
        "fact": "ciphertext-sizes",
        "where": "blob byte lengths, docs.*.dem_size",
        "why": "storage accounting; sizes are inherent to holding blobs",
    },
    {
        "fact": "column-count",
        "where": "patients.*.index_f (equals the file count); the keyword-row "
                 "count is not persisted and only derivable from ciphertext size",
        "why": "dimension checks for atomic index replacement",
    },
]

# Deliberate design choices with leakage consequences, recorded openly.
NOTES = [
    "practitioners cannot enumerate patients; patient ids must be known out of band",
    "index column order equals ingestion order, so the proxy can correlate "
    "column positions with upload times",
    "document removal triggers a visible full-index rebuild",
    "re-encryption keys and transformed capsules are ciphertext-class material "
    "held by the proxy until revocation deletes them",
    "doc ids are client-side HMAC pseudonyms; the proxy cannot confirm a "
    "guessed document by hashing its contents",
    "bearer-token hashes, blob refs, and journal bookkeeping are server "
    "infrastructure, not patient data",
    "public encryption keys (re-encryption and search) are held by design",
]

# Classification of every persisted metadata path. `fact` entries must name a
# VISIBLE_FACTS id; `class` entries are opaque or infrastructure material.
# A `*` matches exactly one path segment (principal/doc ids may not contain
# dots -- the API enforces that); `[]` matches a list index; a trailing `**`
# matches any suffix.
AUDIT_RULES = [
    ("patients.*.pre_public", {"class": "public-key-material"}),
    ("patients.*.enc_fingerprint", {"class": "public-key-material"}),
    ("patients.*.enc_key_ref", {"class": "ciphertext-ref"}),
    ("patients.*.eval_key_ref", {"class": "ciphertext-ref"}),
    ("patients.*.index_ref", {"class": "ciphertext-ref"}),
    ("patients.*.index_f", {"fact": "column-count"}),
    ("patients.*.docs.*.dem_ref", {"class": "ciphertext-ref"}),
    ("patients.*.docs.*.capsule_ref", {"class": "ciphertext-ref"}),
    ("patients.*.docs.*.name_dem_ref", {"class": "ciphertext-ref"}),
    ("patients.*.docs.*.name_capsule_ref", {"class": "ciphertext-ref"}),
    ("patients.*.docs.*.dem_size", {"fact": "ciphertext-sizes"}),
    ("patients.*.doc_order[]", {"class": "pseudonymous-doc-ids"}),
    ("patients.*.token_hash", {"class": "auth-infrastructure"}),
    ("practitioners.*.pre_public", {"class": "public-key-material"}),
    ("practitioners.*.token_hash", {"class": "auth-infrastructure"}),
    ("requests.*.request_id", {"class": "bookkeeping"}),
    ("requests.*.patient_id", {"fact": "principal-ids"}),
    ("requests.*.practitioner_id", {"fact": "principal-ids"}),
    ("requests.*.query_ref", {"class": "ciphertext-ref"}),
    ("requests.*.result_ref", {"class": "ciphertext-ref"}),
    ("requests.*.status", {"fact": "request-statuses"}),
    ("requests.*.retries", {"class": "bookkeeping"}),
    ("requests.*.granted_docs[]", {"class": "pseudonymous-doc-ids"}),
    ("requests.*.timestamps.*", {"fact": "request-timestamps"}),
    ("requests.*.mono.*", {"fact": "request-timestamps"}),
    ("grants.*.request_id", {"class": "bookkeeping"}),
    ("grants.*.patient_id", {"fact": "principal-ids"}),
    ("grants.*.practitioner_id", {"fact": "principal-ids"}),
    ("grants.*.rekey_ref", {"class": "ciphertext-ref"}),
    ("grants.*.granted_docs[]", {"class": "pseudonymous-doc-ids"}),
    ("grants.*.revoked", {"fact": "request-statuses"}),
    ("grants.*.transforms.*.content_tc_ref", {"class": "ciphertext-ref"}),
    ("grants.*.transforms.*.name_tc_ref", {"class": "ciphertext-ref"}),
    ("idempotency.**", {"class": "bookkeeping"}),
    ("seq.*", {"class": "bookkeeping"}),
]


def _pattern_to_regex(pattern: str) -> re.Pattern:
    out = []
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if pattern.startswith("**", i):
            out.append(r".+")
            i += 2
        elif ch == "*":
            out.append(r"[^.\[\]]+")
            i += 1
        elif pattern.startswith("[]", i):
            out.append(r"\[\d+\]")
            i += 2
        else:
            out.append(re.escape(ch))
            i += 1
    return re.compile("^" + "".join(out) + "$")


_COMPILED = [(_pattern_to_regex(p), meta) for p, meta in AUDIT_RULES]


def ledger() -> dict:
    return {"version": 1, "visible": VISIBLE_FACTS, "notes": NOTES,
            "audit_rules": [{"path": p, **meta} for p, meta in AUDIT_RULES]}


def ledger_json() -> str:
    return json.dumps(ledger(), indent=2)


def visible_fact_ids() -> set[str]:
    return {entry["fact"] for entry in VISIBLE_FACTS}


def classify_path(path: str) -> dict | None:
    """First audit rule matching a persisted leaf path, else None."""
    for regex, meta in _COMPILED:
        if regex.match(path):
            return meta
    return None
