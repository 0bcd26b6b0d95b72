import numpy as np
import pytest

import oracle
from conftest import encrypt_query_json
from sealshare import fhe
from sealshare.errors import MalformedInput
from sealshare.fhe import containers
from sealshare.fhe.tags import encode_keyword_tag
from sealshare.indexer import PlainIndexMatrix

# first 8 bytes of SHA-256, computed with an independent tool (sha256sum)
INDEPENDENT_DIGESTS = {
    "covid-19": "88529c3ac8ebd2dc",
    "pneumonia": "72a8df6694d5ca04",
    "dyspnea": "f8d63218336ea525",
    "happy": "489f719cadf91909",
}


def test_tag_matches_independent_hash_tool():
    for word, hex_digest in INDEPENDENT_DIGESTS.items():
        assert encode_keyword_tag(word).digest == bytes.fromhex(hex_digest)


def test_tag_determinism_and_distinctness():
    assert encode_keyword_tag("covid-19") == encode_keyword_tag("covid-19")
    assert encode_keyword_tag("covid-19") != encode_keyword_tag("pneumonia")


def test_tag_is_64_bits_for_any_input():
    for word in ("a", "covid-19", "x" * 500, "多言語キーワード"):
        tag = encode_keyword_tag(word)
        assert len(tag.digest) == 8
        assert tag.bits().shape == (64,)
        assert set(tag.bits().tolist()) <= {0, 1}


def test_empty_keyword_rejected():
    with pytest.raises(MalformedInput):
        encode_keyword_tag("")


def test_tag_bit_order_msb_first():
    tag = encode_keyword_tag("covid-19")
    first_byte = tag.digest[0]
    expected = [(first_byte >> (7 - i)) & 1 for i in range(8)]
    assert tag.bits()[:8].tolist() == expected


# ------------------------------------------------------------- containers

def _index(fast_keys, rng, k=2, f=3):
    bits = rng.integers(0, 2, size=(k, f))
    plain = PlainIndexMatrix(tags=[encode_keyword_tag(f"kw{i}") for i in range(k)],
                             bits=bits)
    return fhe.encrypt_index(plain, fast_keys.enc_key, rng)


def test_index_container_round_trip(fast_keys, rng):
    index = _index(fast_keys, rng)
    blob = containers.serialize_index(index)
    assert blob[:4] == b"SPHX"
    back = containers.deserialize_index(blob)
    assert back.keywords == index.keywords and back.files == index.files
    assert (back.tag_cts == index.tag_cts).all()
    assert (back.matrix_cts == index.matrix_cts).all()
    assert (back.checksum_cts == index.checksum_cts).all()


def test_header_carries_profile_fingerprint_dims(fast_keys, rng):
    index = _index(fast_keys, rng, k=3, f=5)
    blob = containers.serialize_index(index)
    profile, fingerprint, k, f, kind = containers.peek_header(blob)
    assert profile.name == "test-fast"
    assert fingerprint == fast_keys.fingerprint
    assert (k, f) == (3, 5)
    assert kind == containers.KIND_INDEX


def test_query_container_round_trip(fast_keys, rng):
    node = oracle.q_or(oracle.q_not(oracle.atom("a")),
                       oracle.q_and(oracle.atom("b"), oracle.atom("c")))
    query = encrypt_query_json(node, fast_keys.enc_key, rng)
    back = containers.deserialize_query(containers.serialize_query(query))

    def shape(n):
        if isinstance(n, fhe.QueryLeaf):
            return ("leaf",)
        if isinstance(n, fhe.QueryNot):
            return ("not", shape(n.child))
        return (n.op, shape(n.lhs), shape(n.rhs))

    assert shape(back.ast) == shape(query.ast)
    assert (back.ast.lhs.child.atom.cts == query.ast.lhs.child.atom.cts).all()


def test_result_container_round_trip(fast_keys, rng):
    index = _index(fast_keys, rng)
    query = encrypt_query_json(oracle.atom("kw0"), fast_keys.enc_key, rng)
    result = fhe.eval_query(query, index, fast_keys.eval_key)
    back = containers.deserialize_result(containers.serialize_result(result))
    assert (fhe.decrypt_result(back, fast_keys.dec_key)
            == fhe.decrypt_result(result, fast_keys.dec_key)).all()


def test_key_containers_round_trip(fast_keys):
    enc = containers.deserialize_enc_key(containers.serialize_enc_key(fast_keys.enc_key))
    assert enc.fingerprint == fast_keys.fingerprint
    assert (enc.pk.samples == fast_keys.enc_key.pk.samples).all()

    ev = containers.deserialize_eval_key(containers.serialize_eval_key(fast_keys.eval_key))
    assert (ev.bk.bsk == fast_keys.eval_key.bk.bsk).all()
    assert (ev.bk.ksk == fast_keys.eval_key.bk.ksk).all()

    dec = containers.deserialize_dec_key(containers.serialize_dec_key(fast_keys.dec_key))
    assert (dec.sk.s == fast_keys.dec_key.sk.s).all()


def test_deserialized_eval_key_still_evaluates(fast_keys, rng):
    ev_key = containers.deserialize_eval_key(
        containers.serialize_eval_key(fast_keys.eval_key))
    index = _index(fast_keys, rng)
    query = encrypt_query_json(oracle.atom("kw0"), fast_keys.enc_key, rng)
    a = fhe.decrypt_result(fhe.eval_query(query, index, ev_key), fast_keys.dec_key)
    b = fhe.decrypt_result(fhe.eval_query(query, index, fast_keys.eval_key),
                           fast_keys.dec_key)
    assert (a == b).all()


def test_truncated_and_mangled_containers_rejected(fast_keys, rng):
    blob = containers.serialize_index(_index(fast_keys, rng))
    with pytest.raises(MalformedInput):
        containers.deserialize_index(blob[:25])
    with pytest.raises(MalformedInput):
        containers.deserialize_index(b"JUNK" + blob[4:])
    with pytest.raises(MalformedInput):
        containers.deserialize_index(blob + b"\x00")
    with pytest.raises(MalformedInput):
        containers.deserialize_result(blob)  # wrong kind


def test_enc_key_fingerprint_is_verified(fast_keys):
    blob = bytearray(containers.serialize_enc_key(fast_keys.enc_key))
    blob[8] ^= 0xFF  # inside the fingerprint field
    with pytest.raises(MalformedInput):
        containers.deserialize_enc_key(bytes(blob))
