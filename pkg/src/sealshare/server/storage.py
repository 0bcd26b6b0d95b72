"""Proxy-side persistence: content-addressed blobs + a journaled metadata store.

Blobs are immutable ciphertext files named by their SHA-256, so batch
uploads are naturally atomic: stage the bytes, then commit one metadata
event referencing them. The metadata store is a write-ahead journal of JSON
events replayed at startup, with periodic snapshot compaction; every
mutation is fsynced before it is applied in memory, which makes state
transitions crash-safe. A single writer lock serializes mutations; reads
are lock-free over immutable snapshots of the dicts.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Any, Callable, Iterator

from ..errors import NotFound

_SNAPSHOT_EVERY = 256


class BlobStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, ref: str) -> Path:
        if not (len(ref) == 64 and all(c in "0123456789abcdef" for c in ref)):
            raise NotFound(f"bad blob ref {ref!r}")
        return self.root / ref[:2] / ref[2:4] / ref

    def put(self, data: bytes) -> str:
        ref = hashlib.sha256(data).hexdigest()
        path = self._path(ref)
        if path.exists():
            return ref
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp-%d" % threading.get_ident())
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
        return ref

    def get(self, ref: str) -> bytes:
        path = self._path(ref)
        if not path.exists():
            raise NotFound(f"blob {ref} not found")
        return path.read_bytes()

    def size(self, ref: str) -> int:
        path = self._path(ref)
        if not path.exists():
            raise NotFound(f"blob {ref} not found")
        return path.stat().st_size

    def exists(self, ref: str) -> bool:
        return self._path(ref).exists()

    def delete(self, ref: str) -> None:
        path = self._path(ref)
        if path.exists():
            path.unlink()

    def open_stream(self, ref: str):
        path = self._path(ref)
        if not path.exists():
            raise NotFound(f"blob {ref} not found")
        return open(path, "rb")


class MetaStore:
    """In-memory state dict + write-ahead journal.

    Apply functions must be pure state mutations keyed by event `op`; they
    run both on live appends and on replay.
    """

    def __init__(self, root: str | Path, appliers: dict[str, Callable[[dict, dict], None]]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._appliers = appliers
        self._lock = threading.RLock()
        self._snapshot_path = self.root / "snapshot.json"
        self._journal_path = self.root / "events.jsonl"
        self.state: dict[str, Any] = {}
        self._seq = 0
        self._since_snapshot = 0
        self._journal = None
        self._load()

    def _load(self) -> None:
        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text())
            self.state = snap["state"]
            self._seq = snap["seq"]
        else:
            self.state = {}
            self._seq = 0
        if self._journal_path.exists():
            with open(self._journal_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    if event["seq"] <= self._seq:
                        continue
                    self._appliers[event["op"]](self.state, event["data"])
                    self._seq = event["seq"]
        self._journal = open(self._journal_path, "a", encoding="utf-8")

    def append(self, op: str, data: dict) -> None:
        """Journal the event, fsync, then apply it to the in-memory state."""
        with self._lock:
            self._seq += 1
            record = {"seq": self._seq, "op": op, "data": data}
            self._journal.write(json.dumps(record, separators=(",", ":")) + "\n")
            self._journal.flush()
            os.fsync(self._journal.fileno())
            self._appliers[op](self.state, data)
            self._since_snapshot += 1
            if self._since_snapshot >= _SNAPSHOT_EVERY:
                self._write_snapshot()

    def _write_snapshot(self) -> None:
        tmp = self._snapshot_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"seq": self._seq, "state": self.state}, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._snapshot_path)
        self._journal.close()
        self._journal = open(self._journal_path, "w", encoding="utf-8")
        self._since_snapshot = 0

    def close(self) -> None:
        with self._lock:
            self._write_snapshot()
            self._journal.close()
            self._journal = None

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def walk_persisted_fields(self) -> Iterator[tuple[str, Any]]:
        """(dotted key path, leaf value) pairs of the persisted state; the
        leakage audit checks every path against the declared ledger."""
        def walk(prefix: str, value: Any) -> Iterator[tuple[str, Any]]:
            if isinstance(value, dict):
                for key, sub in value.items():
                    yield from walk(f"{prefix}.{key}" if prefix else str(key), sub)
            elif isinstance(value, list):
                for i, sub in enumerate(value):
                    yield from walk(f"{prefix}[{i}]", sub)
            else:
                yield prefix, value

        yield from walk("", self.state)
