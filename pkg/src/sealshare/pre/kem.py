"""Key encapsulation with unidirectional, non-interactive, verifiable
single-hop proxy re-encryption (Umbral-style, over the MODP group).

The symmetric key never appears in any transported object: `encapsulate`
derives it from a DH value, the proxy transforms only the capsule, and the
delegatee re-derives the same DH value through its own secret. Every
transformation ships a DLEQ proof (same exponent across three bases), so a
tampered transform is caught before any decryption is attempted.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..errors import MalformedInput, ProofFailure
from . import group
from .wire import pack_frames, unpack_frames


def _kdf(shared: int, e: int, v: int, length: int = 32) -> bytes:
    material = group.elem_to_bytes(shared) + group.elem_to_bytes(e) + group.elem_to_bytes(v)
    return HKDF(algorithm=SHA256(), length=length, salt=None,
                info=b"sealshare-kem-v1").derive(material)


def _pk_fingerprint(public: int) -> bytes:
    return hashlib.sha256(b"sealshare-pk\x00" + group.elem_to_bytes(public)).digest()[:16]


@dataclass(frozen=True)
class KeyPair:
    secret: int
    public: int

    @staticmethod
    def generate() -> "KeyPair":
        secret = group.random_scalar()
        return KeyPair(secret=secret, public=group.g_pow(secret))

    @property
    def fingerprint(self) -> bytes:
        return _pk_fingerprint(self.public)


def derive_public(secret: int) -> int:
    return group.g_pow(secret)


def public_to_bytes(public: int) -> bytes:
    return pack_frames(b"PUB1", group.elem_to_bytes(public))


def public_from_bytes(raw: bytes) -> int:
    tag, elem = unpack_frames(raw, 2)
    if tag != b"PUB1":
        raise MalformedInput("not a serialized public key")
    return group.elem_from_bytes(elem)


@dataclass(frozen=True)
class Capsule:
    """Encapsulation of a fresh symmetric key under one public key."""
    e: int
    v: int
    s: int
    recipient_fp: bytes

    def to_bytes(self) -> bytes:
        return pack_frames(
            b"CAP1",
            group.elem_to_bytes(self.e),
            group.elem_to_bytes(self.v),
            group.scalar_to_bytes(self.s),
            self.recipient_fp,
        )

    @staticmethod
    def from_bytes(raw: bytes) -> "Capsule":
        tag, e, v, s, fp = unpack_frames(raw, 5)
        if tag != b"CAP1":
            raise MalformedInput("not a serialized capsule")
        if len(fp) != 16:
            raise MalformedInput("bad recipient fingerprint length")
        return Capsule(group.elem_from_bytes(e), group.elem_from_bytes(v),
                       group.scalar_from_bytes(s), fp)

    def check(self) -> None:
        """Integrity check: g^s == V * E^H(E,V). Rejects mangled capsules."""
        h = group.hash_to_scalar(b"capsule", group.elem_to_bytes(self.e),
                                 group.elem_to_bytes(self.v))
        lhs = group.g_pow(self.s)
        rhs = group.elem_mul(self.v, group.elem_pow(self.e, h))
        if lhs != rhs:
            raise ProofFailure("capsule integrity check failed")


def encapsulate(recipient_public: int) -> tuple[Capsule, bytes]:
    """Fresh symmetric key + capsule under `recipient_public`."""
    r = group.random_scalar()
    u = group.random_scalar()
    e = group.g_pow(r)
    v = group.g_pow(u)
    s = group.scalar_add(u, group.scalar_mul(
        r, group.hash_to_scalar(b"capsule", group.elem_to_bytes(e), group.elem_to_bytes(v))))
    shared = group.elem_pow(recipient_public, group.scalar_add(r, u))
    key = _kdf(shared, e, v)
    return Capsule(e=e, v=v, s=s, recipient_fp=_pk_fingerprint(recipient_public)), key


def decapsulate_original(capsule: Capsule, secret: int) -> bytes:
    """Recover the symmetric key as the original recipient."""
    capsule.check()
    public = derive_public(secret)
    if capsule.recipient_fp != _pk_fingerprint(public):
        raise ProofFailure("capsule was not sealed for this key")
    shared = group.elem_pow(group.elem_mul(capsule.e, capsule.v), secret)
    return _kdf(shared, capsule.e, capsule.v)


def _schnorr_sign(secret: int, public: int, msg: bytes) -> tuple[int, int]:
    k = group.random_scalar()
    big_r = group.g_pow(k)
    c = group.hash_to_scalar(b"sig", group.elem_to_bytes(big_r),
                             group.elem_to_bytes(public), msg)
    z = group.scalar_add(k, group.scalar_mul(c, secret))
    return c, z


def _schnorr_verify(public: int, msg: bytes, c: int, z: int) -> bool:
    # R = g^z * pk^{-c}; pk has order q, so pk^{-c} = pk^{q-c}
    big_r = group.elem_mul(group.g_pow(z), group.elem_pow(public, group.Q - c))
    expect = group.hash_to_scalar(b"sig", group.elem_to_bytes(big_r),
                                  group.elem_to_bytes(public), msg)
    return c == expect


@dataclass(frozen=True)
class ReEncryptionKey:
    """Delegation token from one delegator to one delegatee.

    Built from the delegator secret and the delegatee *public* key only
    (non-interactive). `rk` is the transform exponent used by the proxy;
    `u1 = U^rk` is the commitment the DLEQ proof is checked against, and
    `sig` binds (x_a, u1, delegator, delegatee) under the delegator's key.
    """
    rk: int
    x_a: int
    u1: int
    sig_c: int
    sig_z: int
    delegator_public: int
    delegatee_public: int
    delegator_id: str
    delegatee_id: str

    def _signed_blob(self) -> bytes:
        return pack_frames(
            b"RKSIG",
            group.elem_to_bytes(self.x_a),
            group.elem_to_bytes(self.u1),
            group.elem_to_bytes(self.delegator_public),
            group.elem_to_bytes(self.delegatee_public),
            self.delegator_id.encode(),
            self.delegatee_id.encode(),
        )

    def to_bytes(self) -> bytes:
        return pack_frames(
            b"RKY1",
            group.scalar_to_bytes(self.rk),
            group.elem_to_bytes(self.x_a),
            group.elem_to_bytes(self.u1),
            group.scalar_to_bytes(self.sig_c),
            group.scalar_to_bytes(self.sig_z),
            group.elem_to_bytes(self.delegator_public),
            group.elem_to_bytes(self.delegatee_public),
            self.delegator_id.encode(),
            self.delegatee_id.encode(),
        )

    @staticmethod
    def from_bytes(raw: bytes) -> "ReEncryptionKey":
        tag, rk, x_a, u1, c, z, dpk, tpk, did, tid = unpack_frames(raw, 10)
        if tag != b"RKY1":
            raise MalformedInput("not a serialized re-encryption key")
        return ReEncryptionKey(
            rk=group.scalar_from_bytes(rk),
            x_a=group.elem_from_bytes(x_a),
            u1=group.elem_from_bytes(u1),
            sig_c=group.scalar_from_bytes(c),
            sig_z=group.scalar_from_bytes(z),
            delegator_public=group.elem_from_bytes(dpk),
            delegatee_public=group.elem_from_bytes(tpk),
            delegator_id=did.decode(),
            delegatee_id=tid.decode(),
        )


def generate_rekey(delegator_secret: int, delegatee_public: int,
                   delegator_id: str = "", delegatee_id: str = "") -> ReEncryptionKey:
    """Non-interactive: needs nothing from the delegatee beyond its public key."""
    delegator_public = derive_public(delegator_secret)
    x = group.random_scalar()
    x_a = group.g_pow(x)
    dh = group.elem_pow(delegatee_public, x)
    d = group.hash_to_scalar(b"rekey-dh", group.elem_to_bytes(x_a),
                             group.elem_to_bytes(delegatee_public), group.elem_to_bytes(dh))
    rk = group.scalar_mul(delegator_secret, group.scalar_inv(d))
    u1 = group.elem_pow(group.U, rk)
    key = ReEncryptionKey(rk=rk, x_a=x_a, u1=u1, sig_c=0, sig_z=0,
                          delegator_public=delegator_public,
                          delegatee_public=delegatee_public,
                          delegator_id=delegator_id, delegatee_id=delegatee_id)
    c, z = _schnorr_sign(delegator_secret, delegator_public, key._signed_blob())
    return ReEncryptionKey(**{**key.__dict__, "sig_c": c, "sig_z": z})


@dataclass(frozen=True)
class TransformedCapsule:
    """Re-encrypted capsule plus the proof that the transform was honest."""
    e1: int
    v1: int
    x_a: int
    u1: int
    sig_c: int
    sig_z: int
    proof_te: int
    proof_tv: int
    proof_tu: int
    proof_rho: int
    capsule: Capsule

    def to_bytes(self) -> bytes:
        return pack_frames(
            b"TCP1",
            group.elem_to_bytes(self.e1),
            group.elem_to_bytes(self.v1),
            group.elem_to_bytes(self.x_a),
            group.elem_to_bytes(self.u1),
            group.scalar_to_bytes(self.sig_c),
            group.scalar_to_bytes(self.sig_z),
            group.elem_to_bytes(self.proof_te),
            group.elem_to_bytes(self.proof_tv),
            group.elem_to_bytes(self.proof_tu),
            group.scalar_to_bytes(self.proof_rho),
            self.capsule.to_bytes(),
        )

    @staticmethod
    def from_bytes(raw: bytes) -> "TransformedCapsule":
        tag, e1, v1, x_a, u1, c, z, te, tv, tu, rho, cap = unpack_frames(raw, 12)
        if tag != b"TCP1":
            raise MalformedInput("not a serialized transformed capsule")
        return TransformedCapsule(
            e1=group.elem_from_bytes(e1), v1=group.elem_from_bytes(v1),
            x_a=group.elem_from_bytes(x_a), u1=group.elem_from_bytes(u1),
            sig_c=group.scalar_from_bytes(c), sig_z=group.scalar_from_bytes(z),
            proof_te=group.elem_from_bytes(te), proof_tv=group.elem_from_bytes(tv),
            proof_tu=group.elem_from_bytes(tu), proof_rho=group.scalar_from_bytes(rho),
            capsule=Capsule.from_bytes(cap),
        )


def reencrypt(capsule: Capsule, rekey: ReEncryptionKey) -> TransformedCapsule:
    """Transform a capsule for the rekey's delegatee. Proxy-side operation."""
    capsule.check()
    if capsule.recipient_fp != _pk_fingerprint(rekey.delegator_public):
        raise ProofFailure("capsule was not sealed under the rekey's delegator key")
    e1 = group.elem_pow(capsule.e, rekey.rk)
    v1 = group.elem_pow(capsule.v, rekey.rk)

    tau = group.random_scalar()
    te = group.elem_pow(capsule.e, tau)
    tv = group.elem_pow(capsule.v, tau)
    tu = group.elem_pow(group.U, tau)
    h = group.hash_to_scalar(
        b"dleq",
        group.elem_to_bytes(capsule.e), group.elem_to_bytes(capsule.v),
        group.elem_to_bytes(e1), group.elem_to_bytes(v1),
        group.elem_to_bytes(rekey.u1),
        group.elem_to_bytes(te), group.elem_to_bytes(tv), group.elem_to_bytes(tu),
        group.elem_to_bytes(rekey.x_a),
    )
    rho = group.scalar_add(tau, group.scalar_mul(h, rekey.rk))
    return TransformedCapsule(
        e1=e1, v1=v1, x_a=rekey.x_a, u1=rekey.u1,
        sig_c=rekey.sig_c, sig_z=rekey.sig_z,
        proof_te=te, proof_tv=tv, proof_tu=tu, proof_rho=rho,
        capsule=capsule,
    )


def verify_transform(tc: TransformedCapsule, delegator_public: int,
                     delegatee_public: int, delegator_id: str = "",
                     delegatee_id: str = "") -> None:
    """Raise ProofFailure unless the transform is an honest re-encryption."""
    tc.capsule.check()
    if tc.capsule.recipient_fp != _pk_fingerprint(delegator_public):
        raise ProofFailure("capsule recipient does not match the delegator")

    signed = pack_frames(
        b"RKSIG",
        group.elem_to_bytes(tc.x_a),
        group.elem_to_bytes(tc.u1),
        group.elem_to_bytes(delegator_public),
        group.elem_to_bytes(delegatee_public),
        delegator_id.encode(),
        delegatee_id.encode(),
    )
    if not _schnorr_verify(delegator_public, signed, tc.sig_c, tc.sig_z):
        raise ProofFailure("delegation signature does not verify")

    h = group.hash_to_scalar(
        b"dleq",
        group.elem_to_bytes(tc.capsule.e), group.elem_to_bytes(tc.capsule.v),
        group.elem_to_bytes(tc.e1), group.elem_to_bytes(tc.v1),
        group.elem_to_bytes(tc.u1),
        group.elem_to_bytes(tc.proof_te), group.elem_to_bytes(tc.proof_tv),
        group.elem_to_bytes(tc.proof_tu),
        group.elem_to_bytes(tc.x_a),
    )
    checks = (
        (group.elem_pow(tc.capsule.e, tc.proof_rho),
         group.elem_mul(tc.proof_te, group.elem_pow(tc.e1, h))),
        (group.elem_pow(tc.capsule.v, tc.proof_rho),
         group.elem_mul(tc.proof_tv, group.elem_pow(tc.v1, h))),
        (group.elem_pow(group.U, tc.proof_rho),
         group.elem_mul(tc.proof_tu, group.elem_pow(tc.u1, h))),
    )
    for lhs, rhs in checks:
        if lhs != rhs:
            raise ProofFailure("re-encryption proof does not verify")


def decapsulate_transformed(tc: TransformedCapsule, delegatee_secret: int,
                            delegator_public: int, delegator_id: str = "",
                            delegatee_id: str = "") -> bytes:
    """Recover the symmetric key as the delegatee. Verifies the proof first."""
    delegatee_public = derive_public(delegatee_secret)
    verify_transform(tc, delegator_public, delegatee_public,
                     delegator_id, delegatee_id)
    dh = group.elem_pow(tc.x_a, delegatee_secret)
    d = group.hash_to_scalar(b"rekey-dh", group.elem_to_bytes(tc.x_a),
                             group.elem_to_bytes(delegatee_public), group.elem_to_bytes(dh))
    shared = group.elem_pow(group.elem_mul(tc.e1, tc.v1), d)
    return _kdf(shared, tc.capsule.e, tc.capsule.v)
