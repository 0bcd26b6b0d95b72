"""KEM-DEM hybrid sealing with single-hop proxy re-encryption of the key."""

from .kem import (
    Capsule,
    KeyPair,
    ReEncryptionKey,
    TransformedCapsule,
    decapsulate_original,
    decapsulate_transformed,
    derive_public,
    encapsulate,
    generate_rekey,
    public_from_bytes,
    public_to_bytes,
    reencrypt,
    verify_transform,
)
from .sealing import (
    SealedPayload,
    seal,
    seal_stream,
    unseal_original,
    unseal_original_stream,
    unseal_reencrypted,
    unseal_reencrypted_stream,
)


def generate_keypair() -> KeyPair:
    """Fresh re-encryption keypair; the secret never leaves the caller."""
    return KeyPair.generate()


__all__ = [
    "Capsule",
    "KeyPair",
    "ReEncryptionKey",
    "SealedPayload",
    "TransformedCapsule",
    "decapsulate_original",
    "decapsulate_transformed",
    "derive_public",
    "encapsulate",
    "generate_keypair",
    "generate_rekey",
    "public_from_bytes",
    "public_to_bytes",
    "reencrypt",
    "seal",
    "seal_stream",
    "unseal_original",
    "unseal_original_stream",
    "unseal_reencrypted",
    "unseal_reencrypted_stream",
    "verify_transform",
]
