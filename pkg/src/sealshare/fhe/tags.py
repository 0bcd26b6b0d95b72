"""Fixed-width keyword tags: the plaintext unit of the index's tag column.

A tag is the first 64 bits of SHA-256 over the canonical keyword's UTF-8
encoding. Fixed width keeps the equality circuit shape independent of the
keyword, and 64 bits makes accidental collisions negligible for any
realistic vocabulary.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..errors import MalformedInput

TAG_BITS = 64
TAG_BYTES = TAG_BITS // 8


@dataclass(frozen=True)
class KeywordTag:
    digest: bytes  # exactly 8 bytes

    def __post_init__(self):
        if len(self.digest) != TAG_BYTES:
            raise MalformedInput(f"tag must be {TAG_BYTES} bytes")

    def bits(self) -> np.ndarray:
        """64 bits, most significant bit of byte 0 first."""
        return np.unpackbits(np.frombuffer(self.digest, dtype=np.uint8)).astype(np.int64)


def encode_keyword_tag(canonical: str) -> KeywordTag:
    """Tag of an already-normalized keyword (see indexer.normalize_keyword)."""
    if not canonical:
        raise MalformedInput("keyword must be non-empty")
    return KeywordTag(hashlib.sha256(canonical.encode("utf-8")).digest()[:TAG_BYTES])
