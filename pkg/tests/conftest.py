import warnings

import numpy as np
import pytest

from sealshare import fhe

warnings.filterwarnings("ignore", category=DeprecationWarning)

KEYS_SEED = 20240901


@pytest.fixture(scope="session")
def fast_keys() -> fhe.KeySet:
    """One test-fast key set shared across the suite (generation is cheap but
    the bootstrap-key FFT cache is worth reusing)."""
    return fhe.generate_keys("test-fast", seed=KEYS_SEED)


@pytest.fixture(scope="session")
def other_keys() -> fhe.KeySet:
    """An unrelated key set for cross-key negative tests.

    The offset is pinned so the wrong-key checksum fixture decrypts to
    something other than (0, 1); a bit-pair check is probabilistic by
    nature (it slips 1 time in 4 for a random key)."""
    return fhe.generate_keys("test-fast", seed=KEYS_SEED + 2)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1337)


def encrypt_query_json(node: dict, enc_key, rng) -> fhe.EncryptedQuery:
    """Build an EncryptedQuery from the oracle's JSON query shape."""
    def walk(n: dict) -> fhe.QueryNode:
        if n["op"] == "atom":
            return fhe.QueryLeaf(fhe.encrypt_query_atom(n["keyword"], enc_key, rng))
        if n["op"] == "not":
            return fhe.QueryNot(walk(n["child"]))
        return fhe.QueryOp(n["op"], walk(n["lhs"]), walk(n["rhs"]))

    return fhe.EncryptedQuery(enc_key.profile, enc_key.fingerprint, walk(node))
