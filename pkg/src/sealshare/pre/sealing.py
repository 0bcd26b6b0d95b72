"""Hybrid sealing: AEAD-encrypt the payload, encapsulate the fresh key.

Re-encryption happens on the capsule only, so sharing a 10 GiB document
costs the proxy the same as sharing a 1 KiB note.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import BinaryIO

from ..errors import MalformedInput
from . import dem, kem


@dataclass(frozen=True)
class SealedPayload:
    dem_ciphertext: bytes
    capsule: kem.Capsule


def seal(plaintext: bytes, recipient_public: int,
         chunk_size: int = dem.DEFAULT_CHUNK_SIZE) -> SealedPayload:
    """Seal `plaintext` for `recipient_public` with a fresh symmetric key."""
    if not plaintext:
        raise MalformedInput("plaintext must be non-empty")
    capsule, key = kem.encapsulate(recipient_public)
    return SealedPayload(dem_ciphertext=dem.encrypt_bytes(key, plaintext, chunk_size),
                         capsule=capsule)


def seal_stream(src: BinaryIO, dst: BinaryIO, recipient_public: int,
                chunk_size: int = dem.DEFAULT_CHUNK_SIZE) -> kem.Capsule:
    """Streaming variant of seal for payloads too large to hold in memory."""
    capsule, key = kem.encapsulate(recipient_public)
    dem.encrypt_stream(key, src, dst, chunk_size)
    return capsule


def unseal_original(payload: SealedPayload, owner_secret: int) -> bytes:
    """Recover the plaintext as the key owner."""
    key = kem.decapsulate_original(payload.capsule, owner_secret)
    return dem.decrypt_bytes(key, payload.dem_ciphertext)


def unseal_original_stream(capsule: kem.Capsule, src: BinaryIO, dst: BinaryIO,
                           owner_secret: int) -> int:
    key = kem.decapsulate_original(capsule, owner_secret)
    return dem.decrypt_stream(key, src, dst)


def unseal_reencrypted(dem_ciphertext: bytes, tc: kem.TransformedCapsule,
                       delegatee_secret: int, delegator_public: int,
                       delegator_id: str = "", delegatee_id: str = "") -> bytes:
    """Recover the delegator's plaintext as the delegatee.

    Proof verification happens inside decapsulation, before any DEM work.
    """
    key = kem.decapsulate_transformed(tc, delegatee_secret, delegator_public,
                                      delegator_id, delegatee_id)
    return dem.decrypt_bytes(key, dem_ciphertext)


def unseal_reencrypted_stream(tc: kem.TransformedCapsule, src: BinaryIO, dst: BinaryIO,
                              delegatee_secret: int, delegator_public: int,
                              delegator_id: str = "", delegatee_id: str = "") -> int:
    key = kem.decapsulate_transformed(tc, delegatee_secret, delegator_public,
                                      delegator_id, delegatee_id)
    return dem.decrypt_stream(key, src, dst)
