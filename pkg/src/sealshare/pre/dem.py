"""Chunked AEAD data encapsulation.

Wire format: magic "SPH1", 1-byte version, 4-byte big-endian chunk size,
then one record per chunk of `nonce (12) || ciphertext || tag (16)`.
Chunk nonces are an 8-byte random per-seal prefix plus a 4-byte counter,
so a multi-gigabyte payload never reuses a nonce under one key. Chunk
index and a final-chunk flag ride in the AAD, which makes chunk
reordering, truncation, and cross-chunk splicing authentication failures
rather than silent corruption.
"""

from __future__ import annotations

import io
import os
import struct
from typing import BinaryIO

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from ..errors import AuthFailure, EntropyError, MalformedInput

MAGIC = b"SPH1"
VERSION = 1
DEFAULT_CHUNK_SIZE = 4 * 1024 * 1024
KEY_BYTES = 32
NONCE_BYTES = 12
TAG_BYTES = 16
_HEADER = struct.Struct(">4sBI")


def fresh_key() -> bytes:
    try:
        return os.urandom(KEY_BYTES)
    except Exception as exc:  # pragma: no cover
        raise EntropyError("OS entropy source unavailable") from exc


def _aad(chunk_size: int, index: int, final: bool) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, chunk_size) + struct.pack(">IB", index, int(final))


def encrypt_stream(key: bytes, src: BinaryIO, dst: BinaryIO,
                   chunk_size: int = DEFAULT_CHUNK_SIZE) -> int:
    """Encrypt `src` into `dst`; returns the number of plaintext bytes read."""
    if len(key) != KEY_BYTES:
        raise MalformedInput("DEM key must be 32 bytes")
    if chunk_size <= 0 or chunk_size > 0xFFFFFFFF:
        raise MalformedInput("chunk size out of range")
    aead = ChaCha20Poly1305(key)
    prefix = os.urandom(8)
    dst.write(_HEADER.pack(MAGIC, VERSION, chunk_size))

    total = 0
    index = 0
    chunk = src.read(chunk_size)
    if chunk == b"":
        raise MalformedInput("plaintext must be non-empty")
    while True:
        nxt = src.read(chunk_size)
        final = nxt == b""
        nonce = prefix + struct.pack(">I", index)
        dst.write(nonce)
        dst.write(aead.encrypt(nonce, chunk, _aad(chunk_size, index, final)))
        total += len(chunk)
        index += 1
        if final:
            return total
        chunk = nxt


def decrypt_stream(key: bytes, src: BinaryIO, dst: BinaryIO) -> int:
    """Inverse of encrypt_stream; raises AuthFailure on any tampering."""
    if len(key) != KEY_BYTES:
        raise MalformedInput("DEM key must be 32 bytes")
    header = src.read(_HEADER.size)
    if len(header) != _HEADER.size:
        raise MalformedInput("truncated DEM header")
    magic, version, chunk_size = _HEADER.unpack(header)
    if magic != MAGIC:
        raise MalformedInput("bad DEM magic")
    if version != VERSION:
        raise MalformedInput(f"unsupported DEM version {version}")
    if chunk_size == 0:
        raise MalformedInput("zero chunk size")
    aead = ChaCha20Poly1305(key)

    record = NONCE_BYTES + chunk_size + TAG_BYTES
    total = 0
    index = 0
    blob = src.read(record)
    if blob == b"":
        raise MalformedInput("DEM body is empty")
    while True:
        nxt = src.read(record)
        final = nxt == b""
        if len(blob) < NONCE_BYTES + TAG_BYTES + (0 if final else chunk_size):
            raise AuthFailure("truncated DEM chunk")
        nonce, ct = blob[:NONCE_BYTES], blob[NONCE_BYTES:]
        try:
            plain = aead.decrypt(nonce, ct, _aad(chunk_size, index, final))
        except InvalidTag as exc:
            raise AuthFailure("DEM chunk failed authentication") from exc
        dst.write(plain)
        total += len(plain)
        index += 1
        if final:
            return total
        blob = nxt


def encrypt_bytes(key: bytes, plaintext: bytes, chunk_size: int = DEFAULT_CHUNK_SIZE) -> bytes:
    out = io.BytesIO()
    encrypt_stream(key, io.BytesIO(plaintext), out, chunk_size)
    return out.getvalue()


def decrypt_bytes(key: bytes, blob: bytes) -> bytes:
    out = io.BytesIO()
    decrypt_stream(key, io.BytesIO(blob), out)
    return out.getvalue()
