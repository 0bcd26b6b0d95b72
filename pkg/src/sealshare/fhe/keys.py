"""Key set for the homomorphic search engine.

Three rings with strictly different powers:
- EncryptionKey: public; practitioners encrypt query atoms, the proxy may
  encrypt placeholder bits. Cannot decrypt or evaluate.
- EvaluationKey: held by the proxy; evaluates gates. Contains no secret
  key material, so "decrypt with the eval key" is a type error.
- DecryptionKey: patient only; the one object that can read results.

Every key carries the 16-byte fingerprint of the encryption key, and the
same fingerprint travels inside all ciphertext containers so cross-patient
mixups fail fast instead of decrypting to garbage.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..errors import KeyMismatch
from . import engine
from .params import Profile, get_profile


def _fingerprint(profile: Profile, samples: np.ndarray) -> bytes:
    h = hashlib.sha256()
    h.update(b"sealshare-fhe-pk\x00")
    h.update(bytes([profile.profile_id]))
    h.update(np.ascontiguousarray(samples & engine.MASK).astype(">u4").tobytes())
    return h.digest()[:16]


@dataclass(frozen=True)
class EncryptionKey:
    profile: Profile
    pk: engine.PublicKey
    fingerprint: bytes


@dataclass(frozen=True)
class EvaluationKey:
    profile: Profile
    bk: engine.BootstrapKey
    fingerprint: bytes

    def evaluator(self) -> engine.Evaluator:
        return engine.Evaluator(self.bk)


@dataclass(frozen=True)
class DecryptionKey:
    profile: Profile
    sk: engine.SecretKey
    fingerprint: bytes


@dataclass(frozen=True)
class KeySet:
    enc_key: EncryptionKey
    eval_key: EvaluationKey
    dec_key: DecryptionKey

    @property
    def profile(self) -> Profile:
        return self.enc_key.profile

    @property
    def fingerprint(self) -> bytes:
        return self.enc_key.fingerprint


def generate_keys(profile: str | Profile, seed: int | None = None) -> KeySet:
    """Generate a complete key set under the named profile.

    `seed` makes generation reproducible for simulations; leave it None for
    OS entropy.
    """
    prof = get_profile(profile) if isinstance(profile, str) else profile
    rng = engine._rng_from_seed(seed)
    sk = engine.generate_secret_key(prof, rng)
    pk = engine.generate_public_key(sk, rng)
    bk = engine.generate_bootstrap_key(sk, rng)
    fp = _fingerprint(prof, pk.samples)
    return KeySet(
        enc_key=EncryptionKey(prof, pk, fp),
        eval_key=EvaluationKey(prof, bk, fp),
        dec_key=DecryptionKey(prof, sk, fp),
    )


def require_matching(*fingerprints: bytes) -> None:
    first = fingerprints[0]
    for fp in fingerprints[1:]:
        if fp != first:
            raise KeyMismatch("key-set fingerprints do not match")
