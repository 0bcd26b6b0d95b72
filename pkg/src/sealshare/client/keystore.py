"""Passphrase-encrypted local keystore.

scrypt (memory-hard, per-keystore random salt) derives the wrapping key;
the payload is a ChaCha20Poly1305-sealed JSON object. Raw secret bytes
never touch disk unencrypted, which the tests check by scanning the file
for exported key material.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import struct
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from ..errors import AuthFailure, ConflictError, MalformedInput

_MAGIC = b"SKST"
_VERSION = 1
_SCRYPT_N = 1 << 14
_SCRYPT_R = 8
_SCRYPT_P = 1


def _derive(passphrase: str, salt: bytes) -> bytes:
    return hashlib.scrypt(passphrase.encode("utf-8"), salt=salt,
                          n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P,
                          maxmem=64 * 1024 * 1024, dklen=32)


def save_keystore(path: str | Path, passphrase: str, payload: dict,
                  overwrite: bool = False) -> None:
    path = Path(path)
    if path.exists() and not overwrite:
        raise ConflictError(f"keystore already exists at {path}")
    salt = os.urandom(16)
    nonce = os.urandom(12)
    blob = json.dumps(payload).encode("utf-8")
    sealed = ChaCha20Poly1305(_derive(passphrase, salt)).encrypt(nonce, blob, _MAGIC)
    data = _MAGIC + struct.pack(">B", _VERSION) + salt + nonce + sealed
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def load_keystore(path: str | Path, passphrase: str) -> dict:
    raw = Path(path).read_bytes()
    if len(raw) < 4 + 1 + 16 + 12 + 16 or raw[:4] != _MAGIC:
        raise MalformedInput(f"{path} is not a keystore file")
    version = raw[4]
    if version != _VERSION:
        raise MalformedInput(f"unsupported keystore version {version}")
    salt, nonce, sealed = raw[5:21], raw[21:33], raw[33:]
    try:
        blob = ChaCha20Poly1305(_derive(passphrase, salt)).decrypt(nonce, sealed, _MAGIC)
    except InvalidTag as exc:
        raise AuthFailure("wrong passphrase or corrupted keystore") from exc
    return json.loads(blob.decode("utf-8"))


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def unb64(text: str) -> bytes:
    return base64.b64decode(text)
