"""Patient-side plaintext preparation.

Keywords come from annotation sidecars only (one keyword per line, UTF-8);
document bytes are touched just for an integrity digest. The manifest maps
matrix columns to documents, and the vocabulary fixes the row order at
index-creation time: adding a term not in the vocabulary means every
encrypted structure changes shape, which surfaces as RebuildRequired.
"""

from __future__ import annotations

import hashlib
import os
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from .errors import ConflictError, MalformedInput, NotFound, RebuildRequired
from .fhe.tags import KeywordTag, encode_keyword_tag


def normalize_keyword(raw: str) -> str:
    """NFC, lowercase, trimmed, internal whitespace runs collapsed to one space."""
    norm = unicodedata.normalize("NFC", raw)
    norm = " ".join(norm.lower().split())
    if not norm:
        raise MalformedInput("keyword is empty after normalization")
    return norm


def extract_keywords(doc: bytes, sidecar: list[str]) -> tuple[set[str], str]:
    """Normalized, deduplicated keyword set from the sidecar.

    Returns (keywords, content digest); the digest is the only thing the
    document bytes contribute.
    """
    keywords = {normalize_keyword(k) for k in sidecar if k.strip()}
    return keywords, hashlib.sha256(doc).hexdigest()


def read_sidecar(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


@dataclass
class ManifestEntry:
    column: int
    doc_id: str
    filename: str
    sealed_ref: str = ""  # server-side ref of the sealed filename blob


@dataclass
class DocumentManifest:
    vocabulary: list[str] = field(default_factory=list)
    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        for word in self.vocabulary:
            if normalize_keyword(word) != word:
                raise MalformedInput(f"vocabulary entry {word!r} is not canonical")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise MalformedInput("vocabulary entries must be unique")
        self._check_columns()

    def _check_columns(self):
        cols = [e.column for e in self.entries]
        if cols != list(range(len(cols))):
            raise MalformedInput("manifest columns must be 0..F-1 without gaps")
        ids = [e.doc_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise MalformedInput("manifest doc_ids must be unique")

    @property
    def file_count(self) -> int:
        return len(self.entries)

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]

    def column_of(self, doc_id: str) -> int:
        for e in self.entries:
            if e.doc_id == doc_id:
                return e.column
        raise NotFound(f"doc_id {doc_id!r} not in manifest")

    def entry_for_column(self, column: int) -> ManifestEntry:
        return self.entries[column]


@dataclass
class PlainIndexMatrix:
    tags: list[KeywordTag]
    bits: np.ndarray  # (K, F) over {0,1}


def build_index(manifest: DocumentManifest,
                annotations: dict[str, set[str]]) -> PlainIndexMatrix:
    """Occurrence matrix: bits[k][f] = 1 iff column f's doc carries vocabulary[k]."""
    unknown_docs = sorted(set(annotations) - set(manifest.doc_ids()))
    if unknown_docs:
        raise MalformedInput(f"annotations reference unknown doc_ids: {unknown_docs}")
    vocab_set = set(manifest.vocabulary)
    unknown_kw = sorted({k for kws in annotations.values() for k in kws} - vocab_set)
    if unknown_kw:
        raise MalformedInput(f"annotations reference unknown keywords: {unknown_kw}")

    k, f = len(manifest.vocabulary), manifest.file_count
    bits = np.zeros((k, f), dtype=np.int64)
    row = {word: i for i, word in enumerate(manifest.vocabulary)}
    for entry in manifest.entries:
        for word in annotations.get(entry.doc_id, ()):
            bits[row[word], entry.column] = 1
    return PlainIndexMatrix(tags=[encode_keyword_tag(w) for w in manifest.vocabulary],
                            bits=bits)


def add_document(manifest: DocumentManifest, doc_id: str, filename: str,
                 keywords: set[str], sealed_ref: str = "") -> np.ndarray:
    """Append column F; returns the new column's K bits for incremental upload.

    Raises RebuildRequired when a keyword falls outside the fixed vocabulary.
    """
    if doc_id in manifest.doc_ids():
        raise ConflictError(f"doc_id {doc_id!r} already in manifest")
    outside = sorted(set(keywords) - set(manifest.vocabulary))
    if outside:
        raise RebuildRequired(
            f"keywords {outside} are outside the vocabulary; "
            f"extending it requires a full index re-encryption")
    manifest.entries.append(ManifestEntry(column=manifest.file_count, doc_id=doc_id,
                                          filename=filename, sealed_ref=sealed_ref))
    column = np.zeros(len(manifest.vocabulary), dtype=np.int64)
    for word in keywords:
        column[manifest.vocabulary.index(word)] = 1
    return column


def remove_document(manifest: DocumentManifest, doc_id: str) -> dict:
    """Drop the document's column, re-pack column ids, return a rebuild plan.

    Column deletion shifts every later column, so the caller must re-encrypt
    the full matrix; the plan spells that out.
    """
    if doc_id not in manifest.doc_ids():
        raise NotFound(f"doc_id {doc_id!r} not in manifest")
    removed_col = manifest.column_of(doc_id)
    manifest.entries = [e for e in manifest.entries if e.doc_id != doc_id]
    for i, entry in enumerate(manifest.entries):
        entry.column = i
    return {
        "removed_doc_id": doc_id,
        "removed_column": removed_col,
        "rebuild": "full-matrix",
        "new_file_count": manifest.file_count,
    }


# --------------------------------------------------------------- persistence

_HEADER_PREFIX = "#vocab\t"


def save_manifest(manifest: DocumentManifest, path: str | os.PathLike) -> None:
    """Atomic write (temp file + rename): one record per line after a
    vocabulary header block."""
    lines = [f"{_HEADER_PREFIX}{word}" for word in manifest.vocabulary]
    for e in manifest.entries:
        lines.append(f"{e.column}\t{e.doc_id}\t{e.filename}\t{e.sealed_ref}")
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_manifest(path: str | os.PathLike) -> DocumentManifest:
    vocabulary: list[str] = []
    entries: list[ManifestEntry] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith(_HEADER_PREFIX):
                vocabulary.append(line[len(_HEADER_PREFIX):])
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise MalformedInput(f"bad manifest record: {line!r}")
            entries.append(ManifestEntry(column=int(parts[0]), doc_id=parts[1],
                                         filename=parts[2], sealed_ref=parts[3]))
    return DocumentManifest(vocabulary=vocabulary, entries=entries)
