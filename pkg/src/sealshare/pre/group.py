"""Prime-order multiplicative group used by the re-encryption scheme.

A 2048-bit MODP group with a 256-bit prime-order subgroup, generated
deterministically from the public seed below with the FIPS 186-4 A.1.1.2
procedure (SHA-256). All scheme arithmetic is plain modular exponentiation
on big integers via gmpy2; there is deliberately no hand-rolled curve code
here. `verify_domain()` re-checks primality, subgroup order, and generator
provenance and runs in the test suite.

Security is the DSA-2048 class (~112-bit). Exponents live in Z_q (256 bit),
which keeps exponentiation fast enough for bulk re-encryption workloads.
"""

from __future__ import annotations

import hashlib
import secrets

import gmpy2

from ..errors import EntropyError, MalformedInput

DOMAIN_SEED = b"sealshare modp group v1"

P = int(
    "c64515898e66c35ea5c09c247acbff89a08c9524235a8eb0301c7f37a6fb33a2"
    "6cfd8ebde399f01ca883f6066c8c25904f109aa4f7518034bd38a8b6d26d31df"
    "5400966f9221413e46fd2dbbe84d77250f5a8cd9bcb78a9087b296e19369cd46"
    "81ecc5d658875766000cb3f27432ba731cd7c545f6593342ea4aa38e7326574a"
    "6cfe7d2c2c710acc7e543c2f0e218690263def4c6feb71bfbace7e599beb7edc"
    "f87478ca5475f439ea83f9388036b65914bff68d354edc39f115d97730455037"
    "cba514472dde891d88c33e20ea83aa1a56d27f64f49e5ffe0f8bf8db5f2fc822"
    "6a465b776e49fb59be2100afac33710d01669c5711b0423078b74f52c2ff527b",
    16,
)
Q = int("af6d7a00f6dfe10323599a3bb02f1b877d7c7cdcf68df10e43cf4714862bdb17", 16)
G = int(
    "66bf3b68b85ba9961c9570932279ff480c18c276e237ef56d83eee80f098aab1"
    "d898232b0b2ffbc87f6f44dc1723d943c19d6fbfbe73c5007f8147d44dfbcfdf"
    "b1a4abec5c7489d9e528f62447b11bc871da8a362c2aa6854274281187c0e80f"
    "82cf27e9b9bb7e6a03df3468c768f9375d489ddcd6ace8c2e9009fe8fc266e0f"
    "2e47c261f840966770e2f3183c79c4880370dc5d5f402f10a8141a3831db3927"
    "64528fecaa654dfbc2abc4052b58d0c0f22a03416eeb9606457baf4ef791c382"
    "1553bdf5e693f4fca1d7727924eca6d124e5f416356db0a910dcbfbb9c773367"
    "183e63ddbceefecae6af602e396074c9d9c2468ff8bf9aed6d3ee168c0da8713",
    16,
)

ELEMENT_BYTES = 256
SCALAR_BYTES = 32

_P = gmpy2.mpz(P)
_Q = gmpy2.mpz(Q)
_G = gmpy2.mpz(G)


def derive_domain(seed: bytes = DOMAIN_SEED, bits_p: int = 2048, bits_q: int = 256):
    """Re-derive (p, q, g) from the seed; used to audit the constants above."""

    def sha_int(data: bytes) -> int:
        return int.from_bytes(hashlib.sha256(data).digest(), "big")

    outlen = 256
    n = (bits_p - 1) // outlen
    b = (bits_p - 1) % outlen

    counter_seed = 0
    while True:
        stamped = seed + counter_seed.to_bytes(4, "big")
        u = sha_int(stamped) % (1 << (bits_q - 1))
        q = u | (1 << (bits_q - 1)) | 1
        if gmpy2.is_prime(q, 64):
            break
        counter_seed += 1

    offset = 1
    for _ in range(4 * bits_p):
        w = 0
        for j in range(n):
            w |= sha_int(stamped + (offset + j).to_bytes(4, "big")) << (outlen * j)
        w |= (sha_int(stamped + (offset + n).to_bytes(4, "big")) % (1 << b)) << (outlen * n)
        x = w | (1 << (bits_p - 1))
        c = x % (2 * q)
        p = x - (c - 1)
        if p >= (1 << (bits_p - 1)) and gmpy2.is_prime(p, 64):
            break
        offset += n + 1
    else:
        raise RuntimeError("prime search exhausted")

    e = (p - 1) // q
    for h in range(2, 100):
        g = pow(h, e, p)
        if g > 1:
            break
    return int(p), int(q), int(g)


def verify_domain() -> None:
    """Check embedded constants: primality, subgroup order, seed provenance."""
    if not gmpy2.is_prime(_P, 64) or not gmpy2.is_prime(_Q, 64):
        raise AssertionError("group modulus or order fails primality")
    if (P - 1) % Q != 0:
        raise AssertionError("q does not divide p-1")
    if pow(G, Q, P) != 1 or G in (0, 1, P - 1):
        raise AssertionError("generator does not have order q")
    if derive_domain() != (P, Q, G):
        raise AssertionError("constants do not match their seed derivation")


def random_scalar() -> int:
    """Uniform nonzero scalar in Z_q from the OS entropy source."""
    try:
        while True:
            s = secrets.randbelow(Q)
            if s != 0:
                return s
    except Exception as exc:  # pragma: no cover - urandom failure is exotic
        raise EntropyError("OS entropy source unavailable") from exc


def g_pow(e: int) -> int:
    return int(gmpy2.powmod(_G, e, _P))


def elem_pow(base: int, e: int) -> int:
    return int(gmpy2.powmod(base, e, _P))


def elem_mul(a: int, b: int) -> int:
    return int(gmpy2.f_mod(gmpy2.mul(a, b), _P))


def scalar_inv(s: int) -> int:
    return int(gmpy2.invert(s, _Q))


def scalar_mul(a: int, b: int) -> int:
    return (a * b) % Q


def scalar_add(a: int, b: int) -> int:
    return (a + b) % Q


def hash_to_scalar(tag: bytes, *parts: bytes) -> int:
    """Domain-separated hash onto Z_q^* (Fiat-Shamir challenges, DH digests)."""
    h = hashlib.sha256()
    h.update(b"sealshare-h2s\x00" + tag)
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    counter = 0
    while True:
        candidate = int.from_bytes(
            hashlib.sha256(h.digest() + counter.to_bytes(4, "big")).digest()
            + hashlib.sha256(h.digest() + (counter + 1).to_bytes(4, "big")).digest(),
            "big",
        ) % Q
        if candidate != 0:
            return candidate
        counter += 2


def hash_to_element(tag: bytes) -> int:
    """Independent subgroup element with unknown discrete log w.r.t. g."""
    counter = 0
    while True:
        seed = hashlib.sha256(b"sealshare-h2e\x00" + tag + counter.to_bytes(4, "big")).digest()
        x = int.from_bytes(seed * 8, "big") % P
        candidate = pow(x, (P - 1) // Q, P)
        if candidate not in (0, 1):
            return candidate
        counter += 1


# Second generator for re-encryption key commitments; log_g(U) is unknown.
U = hash_to_element(b"rekey-commitment-generator")


def elem_to_bytes(x: int) -> bytes:
    return x.to_bytes(ELEMENT_BYTES, "big")


def elem_from_bytes(raw: bytes) -> int:
    if len(raw) != ELEMENT_BYTES:
        raise MalformedInput(f"group element must be {ELEMENT_BYTES} bytes, got {len(raw)}")
    x = int.from_bytes(raw, "big")
    if not 1 < x < P:
        raise MalformedInput("group element out of range")
    if pow(x, Q, P) != 1:
        raise MalformedInput("value is not in the prime-order subgroup")
    return x


def scalar_to_bytes(s: int) -> bytes:
    return s.to_bytes(SCALAR_BYTES, "big")


def scalar_from_bytes(raw: bytes) -> int:
    if len(raw) != SCALAR_BYTES:
        raise MalformedInput(f"scalar must be {SCALAR_BYTES} bytes, got {len(raw)}")
    s = int.from_bytes(raw, "big")
    if s >= Q:
        raise MalformedInput("scalar out of range")
    return s
