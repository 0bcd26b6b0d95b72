import inspect
import os
import time

import pytest

from sealshare import pre
from sealshare.errors import AuthFailure, MalformedInput, ProofFailure
from sealshare.pre import group, kem


@pytest.fixture(scope="module")
def alice():
    return pre.generate_keypair()


@pytest.fixture(scope="module")
def bob():
    return pre.generate_keypair()


@pytest.fixture(scope="module")
def carol():
    return pre.generate_keypair()


# ------------------------------------------------------------------ keypairs

def test_public_derivable_from_secret(alice):
    assert pre.derive_public(alice.secret) == alice.public


def test_fresh_pairs_are_distinct():
    a, b = pre.generate_keypair(), pre.generate_keypair()
    assert a.public != b.public and a.secret != b.secret


def test_thousand_keypairs_collision_scan():
    publics = {pre.generate_keypair().public for _ in range(1000)}
    assert len(publics) == 1000


# ---------------------------------------------------------------------- seal

def test_seal_round_trip_1kib(alice):
    payload = os.urandom(1024)
    sealed = pre.seal(payload, alice.public)
    assert pre.unseal_original(sealed, alice.secret) == payload


def test_seal_uses_fresh_key_per_call(alice):
    payload = os.urandom(256)
    a = pre.seal(payload, alice.public)
    b = pre.seal(payload, alice.public)
    assert a.dem_ciphertext != b.dem_ciphertext
    assert a.capsule.to_bytes() != b.capsule.to_bytes()


def test_seal_rejects_empty(alice):
    with pytest.raises(MalformedInput):
        pre.seal(b"", alice.public)


def test_round_trip_chunk_boundaries_up_to_10mib(alice):
    four = 4 * 1024 * 1024
    for size in (1, 37, four - 1, four, four + 1, 10 * 1024 * 1024):
        payload = os.urandom(size)
        assert pre.unseal_original(pre.seal(payload, alice.public), alice.secret) == payload


def test_seal_and_unseal_timing_monotone_in_size(alice):
    """1 MiB seals quickly; 1 MiB -> 100 MiB grows for both directions."""
    small, large = os.urandom(1 << 20), os.urandom(100 << 20)

    t0 = time.perf_counter()
    sealed_small = pre.seal(small, alice.public)
    t_seal_small = time.perf_counter() - t0
    assert t_seal_small < 5.0

    t0 = time.perf_counter()
    sealed_large = pre.seal(large, alice.public)
    t_seal_large = time.perf_counter() - t0

    t0 = time.perf_counter()
    pre.unseal_original(sealed_small, alice.secret)
    t_unseal_small = time.perf_counter() - t0
    t0 = time.perf_counter()
    pre.unseal_original(sealed_large, alice.secret)
    t_unseal_large = time.perf_counter() - t0

    assert t_seal_large > t_seal_small
    assert t_unseal_large > t_unseal_small


# -------------------------------------------------------------------- unseal

def test_unseal_with_wrong_key_fails(alice, bob):
    sealed = pre.seal(b"payload", alice.public)
    with pytest.raises((AuthFailure, ProofFailure)):
        pre.unseal_original(sealed, bob.secret)


def test_unseal_distinguishes_malformed_from_auth_failure(alice):
    sealed = pre.seal(os.urandom(64), alice.public)
    with pytest.raises(MalformedInput):
        pre.unseal_original(pre.SealedPayload(b"\x00\x01", sealed.capsule), alice.secret)
    flipped = bytearray(sealed.dem_ciphertext)
    flipped[len(flipped) // 2] ^= 0x10
    with pytest.raises(AuthFailure):
        pre.unseal_original(pre.SealedPayload(bytes(flipped), sealed.capsule), alice.secret)


def test_every_ciphertext_bit_flip_fails(alice):
    sealed = pre.seal(os.urandom(64), alice.public)
    for i in range(len(sealed.dem_ciphertext)):
        mutated = bytearray(sealed.dem_ciphertext)
        mutated[i] ^= 1 << (i % 8)
        with pytest.raises((AuthFailure, MalformedInput)):
            pre.unseal_original(pre.SealedPayload(bytes(mutated), sealed.capsule),
                                alice.secret)


# --------------------------------------------------------------------- rekey

def test_rekey_is_non_interactive_by_signature():
    params = list(inspect.signature(pre.generate_rekey).parameters)
    assert params[:2] == ["delegator_secret", "delegatee_public"]
    assert not any("delegatee_secret" in p for p in params)


def test_full_delegation_chain(alice, bob):
    payload = os.urandom(1024)
    sealed = pre.seal(payload, alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)
    out = pre.unseal_reencrypted(sealed.dem_ciphertext, tc, bob.secret,
                                 alice.public, "alice", "bob")
    assert out == payload


def test_rekey_wrong_direction_never_silently_succeeds(alice, bob):
    sealed_for_bob = pre.seal(b"bob's document", bob.public)
    rekey_a_to_b = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    with pytest.raises(ProofFailure):
        pre.reencrypt(sealed_for_bob.capsule, rekey_a_to_b)


def test_swapped_roles_chain_fails(alice, bob):
    payload = os.urandom(128)
    sealed = pre.seal(payload, alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)
    # roles swapped: Alice pretending to be the delegatee of her own rekey
    with pytest.raises((ProofFailure, AuthFailure)):
        pre.unseal_reencrypted(sealed.dem_ciphertext, tc, alice.secret,
                               bob.public, "alice", "bob")


# ----------------------------------------------------------------- reencrypt

def test_honest_transform_verifies(alice, bob):
    sealed = pre.seal(b"data", alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)
    pre.verify_transform(tc, alice.public, bob.public, "alice", "bob")


def test_tampered_transform_is_rejected(alice, bob):
    sealed = pre.seal(b"data", alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)
    bad = kem.TransformedCapsule(**{**tc.__dict__, "e1": group.elem_mul(tc.e1, group.G)})
    with pytest.raises(ProofFailure):
        pre.verify_transform(bad, alice.public, bob.public, "alice", "bob")


def test_mismatched_capsule_rekey_rejected(alice, bob, carol):
    sealed = pre.seal(b"data", carol.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    with pytest.raises(ProofFailure):
        pre.reencrypt(sealed.capsule, rekey)


def test_reencrypt_cost_independent_of_document_size(alice, bob):
    small = pre.seal(os.urandom(1024), alice.public)
    large = pre.seal(os.urandom(32 << 20), alice.public)
    assert len(small.capsule.to_bytes()) == len(large.capsule.to_bytes())
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")

    def clock(capsule, repeats=5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            pre.reencrypt(capsule, rekey)
        return (time.perf_counter() - t0) / repeats

    t_small, t_large = clock(small.capsule), clock(large.capsule)
    assert t_large < 5 * t_small + 0.05  # capsule-only work; no size dependence


def test_wrong_delegatee_cannot_unseal(alice, bob, carol):
    sealed = pre.seal(b"confidential", alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)
    with pytest.raises((ProofFailure, AuthFailure)):
        pre.unseal_reencrypted(sealed.dem_ciphertext, tc, carol.secret,
                               alice.public, "alice", "bob")


def test_proof_checked_before_dem_decryption(alice, bob):
    sealed = pre.seal(b"payload", alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)
    bad = kem.TransformedCapsule(**{**tc.__dict__, "v1": group.elem_mul(tc.v1, group.G)})
    # dem_ciphertext deliberately garbage: the proof failure must fire first
    with pytest.raises(ProofFailure):
        pre.unseal_reencrypted(b"not-a-dem-blob", bad, bob.secret,
                               alice.public, "alice", "bob")


# -------------------------------------------------------------- serialization

def test_wire_round_trips(alice, bob):
    sealed = pre.seal(b"data", alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    tc = pre.reencrypt(sealed.capsule, rekey)

    assert kem.Capsule.from_bytes(sealed.capsule.to_bytes()) == sealed.capsule
    rk2 = kem.ReEncryptionKey.from_bytes(rekey.to_bytes())
    assert rk2 == rekey
    tc2 = kem.TransformedCapsule.from_bytes(tc.to_bytes())
    assert tc2 == tc
    assert pre.public_from_bytes(pre.public_to_bytes(alice.public)) == alice.public


def test_proxy_opacity_no_dem_key_bytes_on_the_wire(alice, bob):
    """The DEM key must never appear in any transported object (100 trials)."""
    for _ in range(100):
        capsule, key = pre.encapsulate(alice.public)
        rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
        tc = pre.reencrypt(capsule, rekey)
        wire = capsule.to_bytes() + rekey.to_bytes() + tc.to_bytes()
        assert key not in wire
        assert key[:8] not in wire  # not even a fragment


def test_every_byte_mutation_of_transform_is_rejected(alice, bob):
    """Single-byte mutation sweep over the serialized transformed capsule."""
    sealed = pre.seal(b"x" * 64, alice.public)
    rekey = pre.generate_rekey(alice.secret, bob.public, "alice", "bob")
    blob = bytearray(pre.reencrypt(sealed.capsule, rekey).to_bytes())
    rng_state = 0x9E3779B9
    for i in range(len(blob)):
        rng_state = (rng_state * 1103515245 + 12345) & 0x7FFFFFFF
        mutated = bytearray(blob)
        mutated[i] ^= 1 << (rng_state % 8)
        if bytes(mutated) == bytes(blob):  # bit flip in a length prefix may wrap
            continue
        with pytest.raises((ProofFailure, MalformedInput)):
            tc = kem.TransformedCapsule.from_bytes(bytes(mutated))
            pre.verify_transform(tc, alice.public, bob.public, "alice", "bob")
