import numpy as np
import pytest

import oracle
from conftest import encrypt_query_json
from sealshare import fhe
from sealshare.errors import KeyMismatch, MalformedInput
from sealshare.fhe.tags import encode_keyword_tag
from sealshare.indexer import PlainIndexMatrix

VOCAB2 = ["covid-19", "pneumonia"]
FILES2x3 = [{"covid-19"}, {"pneumonia"}, {"covid-19", "pneumonia"}]


def make_plain(vocabulary, files):
    bits = np.array(oracle.occurrence_matrix(vocabulary, files), dtype=np.int64)
    return PlainIndexMatrix(tags=[encode_keyword_tag(w) for w in vocabulary], bits=bits)


@pytest.fixture(scope="module")
def fixture_index(fast_keys):
    rng = np.random.default_rng(99)
    return fhe.encrypt_index(make_plain(VOCAB2, FILES2x3), fast_keys.enc_key, rng)


# -------------------------------------------------------------- encrypt_index

def test_index_decrypts_to_plain_matrix(fast_keys, rng):
    for _ in range(3):
        k, f = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        bits = rng.integers(0, 2, size=(k, f))
        plain = PlainIndexMatrix(
            tags=[encode_keyword_tag(f"kw-{i}") for i in range(k)], bits=bits)
        enc = fhe.encrypt_index(plain, fast_keys.enc_key, rng)
        tag_bits, matrix = fhe.decrypt_index(enc, fast_keys.dec_key)
        assert (matrix == bits).all()
        expected_tags = np.stack([t.bits() for t in plain.tags])
        assert (tag_bits == expected_tags).all()


def test_one_by_one_index_is_65_ciphertext_bits(fast_keys, rng):
    plain = make_plain(["covid-19"], [{"covid-19"}])
    enc = fhe.encrypt_index(plain, fast_keys.enc_key, rng)
    assert enc.tag_cts.shape[0] + enc.matrix_cts.shape[0] == 64 + 1


def test_index_dimension_validation(fast_keys, rng):
    with pytest.raises(MalformedInput):
        fhe.encrypt_index(PlainIndexMatrix(tags=[], bits=np.zeros((0, 2))),
                          fast_keys.enc_key, rng)
    with pytest.raises(MalformedInput):
        fhe.encrypt_index(
            PlainIndexMatrix(tags=[encode_keyword_tag("x")],
                             bits=np.array([[2, 0]])), fast_keys.enc_key, rng)


# ---------------------------------------------------------------- selector

def test_selector_hits_matching_row(fast_keys, fixture_index, rng):
    atom = fhe.encrypt_query_atom("pneumonia", fast_keys.enc_key, rng)
    ev = fast_keys.eval_key.evaluator()
    selector = fhe.eval_selector(atom, fixture_index, ev)
    assert list(fhe.decrypt_selector(selector, fast_keys.dec_key)) == [0, 1]


def test_selector_absent_keyword_is_all_zero(fast_keys, fixture_index, rng):
    atom = fhe.encrypt_query_atom("happy", fast_keys.enc_key, rng)
    ev = fast_keys.eval_key.evaluator()
    selector = fhe.eval_selector(atom, fixture_index, ev)
    assert list(fhe.decrypt_selector(selector, fast_keys.dec_key)) == [0, 0]


def test_selector_degenerate_single_row(fast_keys, rng):
    enc = fhe.encrypt_index(make_plain(["dyspnea"], [{"dyspnea"}]),
                            fast_keys.enc_key, rng)
    ev = fast_keys.eval_key.evaluator()
    hit = fhe.eval_selector(fhe.encrypt_query_atom("dyspnea", fast_keys.enc_key, rng),
                            enc, ev)
    miss = fhe.eval_selector(fhe.encrypt_query_atom("fatigue", fast_keys.enc_key, rng),
                             enc, ev)
    assert list(fhe.decrypt_selector(hit, fast_keys.dec_key)) == [1]
    assert list(fhe.decrypt_selector(miss, fast_keys.dec_key)) == [0]


def test_selector_soundness_hamming_weight_at_most_one(fast_keys, rng):
    for trial in range(5):
        k = int(rng.integers(1, 9))
        vocab = [f"term-{trial}-{i}" for i in range(k)]
        files = [set(rng.choice(vocab, size=1)) for _ in range(3)]
        enc = fhe.encrypt_index(make_plain(vocab, files), fast_keys.enc_key, rng)
        word = str(rng.choice(vocab))
        ev = fast_keys.eval_key.evaluator()
        sel = fhe.eval_selector(fhe.encrypt_query_atom(word, fast_keys.enc_key, rng),
                                enc, ev)
        bits = fhe.decrypt_selector(sel, fast_keys.dec_key)
        assert bits.sum() <= 1
        assert bits[vocab.index(word)] == 1


def test_selector_key_mismatch_detected(fast_keys, other_keys, fixture_index, rng):
    atom = fhe.encrypt_query_atom("pneumonia", other_keys.enc_key, rng)
    with pytest.raises(KeyMismatch):
        fhe.eval_selector(atom, fixture_index, fast_keys.eval_key.evaluator())


# ------------------------------------------------------------- mask and fold

def test_mask_and_fold_fixture(fast_keys, rng):
    """Frozen oracle fixture: selector (0,1) over rows [(1,0,0),(0,1,1)]."""
    plain = PlainIndexMatrix(
        tags=[encode_keyword_tag("a"), encode_keyword_tag("b")],
        bits=np.array([[1, 0, 0], [0, 1, 1]]))
    enc = fhe.encrypt_index(plain, fast_keys.enc_key, rng)
    ev = fast_keys.eval_key.evaluator()
    atom = fhe.encrypt_query_atom("b", fast_keys.enc_key, rng)
    selector = fhe.eval_selector(atom, enc, ev)
    result = fhe.eval_mask_and_fold(selector, enc, ev)
    assert list(fhe.decrypt_result(result, fast_keys.dec_key)) == [0, 1, 1]


def test_mask_and_fold_zero_selector(fast_keys, fixture_index, rng):
    ev = fast_keys.eval_key.evaluator()
    atom = fhe.encrypt_query_atom("absent-term", fast_keys.enc_key, rng)
    selector = fhe.eval_selector(atom, fixture_index, ev)
    result = fhe.eval_mask_and_fold(selector, fixture_index, ev)
    assert list(fhe.decrypt_result(result, fast_keys.dec_key)) == [0, 0, 0]


def test_mask_and_fold_single_row_returns_row(fast_keys, rng):
    plain = make_plain(["solo"], [set(), {"solo"}, {"solo"}, set()])
    enc = fhe.encrypt_index(plain, fast_keys.enc_key, rng)
    ev = fast_keys.eval_key.evaluator()
    sel = fhe.eval_selector(fhe.encrypt_query_atom("solo", fast_keys.enc_key, rng),
                            enc, ev)
    result = fhe.eval_mask_and_fold(sel, enc, ev)
    assert list(fhe.decrypt_result(result, fast_keys.dec_key)) == [0, 1, 1, 0]


# ------------------------------------------------------------------- combine

def test_bool_combine_tables(fast_keys, rng):
    def vec(bits):
        cts = fhe.engine.encrypt_bits_public(np.array(bits), fast_keys.enc_key.pk, rng)
        check = fhe.engine.encrypt_bits_public(np.array([0, 1]), fast_keys.enc_key.pk, rng)
        return fhe.EncryptedResultVector(fast_keys.profile, fast_keys.fingerprint,
                                         len(bits), cts, check)

    ev = fast_keys.eval_key.evaluator()
    a, b = vec([1, 0, 0]), vec([0, 1, 0])
    assert list(fhe.decrypt_result(
        fhe.eval_bool_combine("or", a, b, ev), fast_keys.dec_key)) == [1, 1, 0]
    assert list(fhe.decrypt_result(
        fhe.eval_bool_combine("and", a, b, ev), fast_keys.dec_key)) == [0, 0, 0]
    c = vec([1, 0, 1])
    assert list(fhe.decrypt_result(
        fhe.eval_bool_combine("not", c, None, ev), fast_keys.dec_key)) == [0, 1, 0]
    # AND with itself is idempotent
    assert list(fhe.decrypt_result(
        fhe.eval_bool_combine("and", c, c, ev), fast_keys.dec_key)) == [1, 0, 1]
    with pytest.raises(MalformedInput):
        fhe.eval_bool_combine("or", a, vec([1, 0]), ev)


# ---------------------------------------------------------------- eval_query

def test_or_query_matches_oracle_on_fixture(fast_keys, fixture_index, rng):
    node = oracle.q_or(oracle.atom("pneumonia"), oracle.atom("covid-19"))
    query = encrypt_query_json(node, fast_keys.enc_key, rng)
    result = fhe.eval_query(query, fixture_index, fast_keys.eval_key)
    got = list(fhe.decrypt_result(result, fast_keys.dec_key))
    assert got == oracle.inverted_index_eval(FILES2x3, node) == [1, 1, 1]


def test_single_leaf_query_equals_selector_then_fold(fast_keys, fixture_index, rng):
    node = oracle.atom("covid-19")
    query = encrypt_query_json(node, fast_keys.enc_key, rng)
    via_query = fhe.decrypt_result(
        fhe.eval_query(query, fixture_index, fast_keys.eval_key), fast_keys.dec_key)

    ev = fast_keys.eval_key.evaluator()
    sel = fhe.eval_selector(query.ast.atom, fixture_index, ev)
    via_parts = fhe.decrypt_result(
        fhe.eval_mask_and_fold(sel, fixture_index, ev), fast_keys.dec_key)
    assert list(via_query) == list(via_parts) == [1, 0, 1]


def test_random_queries_match_oracle(fast_keys, rng):
    vocab = [f"w{i}" for i in range(6)]
    for trial in range(6):
        k = int(rng.integers(1, 7))
        f = int(rng.integers(1, 8))
        sub_vocab = vocab[:k]
        files = [set(rng.choice(sub_vocab, size=int(rng.integers(0, k + 1)),
                                replace=False)) for _ in range(f)]
        enc = fhe.encrypt_index(make_plain(sub_vocab, files), fast_keys.enc_key, rng)
        node = oracle.random_query(rng, sub_vocab + ["missing-term"], max_leaves=3)
        query = encrypt_query_json(node, fast_keys.enc_key, rng)
        got = list(fhe.decrypt_result(
            fhe.eval_query(query, enc, fast_keys.eval_key), fast_keys.dec_key))
        assert got == oracle.inverted_index_eval(files, node), f"trial {trial}: {node}"


def test_query_shape_caps(fast_keys, rng):
    node = oracle.atom("a")
    for _ in range(8):
        node = oracle.q_not(node)
    query = encrypt_query_json(node, fast_keys.enc_key, rng)
    with pytest.raises(MalformedInput):
        fhe.circuits.validate_query_shape(query.ast)

    wide = oracle.atom("w0")
    for i in range(8):
        wide = oracle.q_or(wide, oracle.atom(f"w{i + 1}"))
    query = encrypt_query_json(wide, fast_keys.enc_key, rng)
    with pytest.raises(MalformedInput):
        fhe.circuits.validate_query_shape(query.ast)


# ------------------------------------------------------------ obliviousness

def test_gate_sequence_independent_of_plaintext(fast_keys, rng):
    """Matching vs non-matching query over same dims: identical gate logs."""
    vocab = ["alpha", "beta", "gamma"]
    files = [{"alpha"}, {"beta"}, {"alpha", "gamma"}, set()]
    enc = fhe.encrypt_index(make_plain(vocab, files), fast_keys.enc_key, rng)

    def gate_log(keyword):
        ev = fast_keys.eval_key.evaluator()
        sel = fhe.eval_selector(
            fhe.encrypt_query_atom(keyword, fast_keys.enc_key, rng), enc, ev)
        fhe.eval_mask_and_fold(sel, enc, ev)
        return ev.gate_log

    assert gate_log("alpha") == gate_log("no-such-keyword")


# ------------------------------------------------------------------- decrypt

def test_decrypt_result_checksum_catches_wrong_key(fast_keys, other_keys,
                                                   fixture_index, rng):
    node = oracle.atom("covid-19")
    query = encrypt_query_json(node, fast_keys.enc_key, rng)
    result = fhe.eval_query(query, fixture_index, fast_keys.eval_key)
    # honest fingerprint check fires first
    with pytest.raises(KeyMismatch):
        fhe.decrypt_result(result, other_keys.dec_key)
    # forged fingerprint: the checksum pair still catches the mismatch
    forged = fhe.EncryptedResultVector(result.profile, other_keys.fingerprint,
                                       result.files, result.bits, result.checksum_cts)
    with pytest.raises(KeyMismatch):
        fhe.decrypt_result(forged, other_keys.dec_key)
