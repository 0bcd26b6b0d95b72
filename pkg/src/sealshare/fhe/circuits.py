"""Homomorphic search circuits over an encrypted keyword x file index.

Pipeline per query leaf: encrypted tag equality (bitwise XNOR + balanced
64-leaf AND tree per row) -> K-bit selector -> row masking (AND) -> balanced
OR fold down the columns -> F-bit result vector. Boolean operators combine
per-leaf result vectors element-wise; NOT is a free linear negation.

The gate sequence for a given (K, F, query shape) is fixed: nothing about
the plaintext changes which gates run, which is what keeps the evaluating
proxy oblivious. Tests pin this by comparing instrumented gate logs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..errors import KeyMismatch, MalformedInput
from . import engine
from .keys import DecryptionKey, EncryptionKey, EvaluationKey
from .params import Profile
from .tags import TAG_BITS, KeywordTag, encode_keyword_tag

MAX_QUERY_DEPTH = 8
MAX_QUERY_LEAVES = 8


@dataclass
class EncryptedIndex:
    profile: Profile
    fingerprint: bytes
    keywords: int                 # K
    files: int                    # F
    tag_cts: np.ndarray           # (K * 64, n+1)
    matrix_cts: np.ndarray        # (K * F, n+1)
    checksum_cts: np.ndarray      # (2, n+1): encryptions of (0, 1)


@dataclass
class EncryptedAtom:
    profile: Profile
    fingerprint: bytes
    cts: np.ndarray               # (64, n+1)


@dataclass
class QueryLeaf:
    atom: EncryptedAtom


@dataclass
class QueryNot:
    child: "QueryNode"


@dataclass
class QueryOp:
    op: str                       # "or" | "and"
    lhs: "QueryNode"
    rhs: "QueryNode"


QueryNode = Union[QueryLeaf, QueryNot, QueryOp]


@dataclass
class EncryptedQuery:
    profile: Profile
    fingerprint: bytes
    ast: QueryNode


@dataclass
class EncryptedResultVector:
    profile: Profile
    fingerprint: bytes
    files: int
    bits: np.ndarray              # (F, n+1)
    checksum_cts: np.ndarray      # (2, n+1)


def query_depth(node: QueryNode) -> int:
    if isinstance(node, QueryLeaf):
        return 1
    if isinstance(node, QueryNot):
        return 1 + query_depth(node.child)
    return 1 + max(query_depth(node.lhs), query_depth(node.rhs))


def query_leaves(node: QueryNode) -> int:
    if isinstance(node, QueryLeaf):
        return 1
    if isinstance(node, QueryNot):
        return query_leaves(node.child)
    return query_leaves(node.lhs) + query_leaves(node.rhs)


def validate_query_shape(node: QueryNode,
                         max_depth: int = MAX_QUERY_DEPTH,
                         max_leaves: int = MAX_QUERY_LEAVES) -> None:
    if query_depth(node) > max_depth:
        raise MalformedInput(f"query deeper than {max_depth}")
    if query_leaves(node) > max_leaves:
        raise MalformedInput(f"query has more than {max_leaves} atoms")


# ------------------------------------------------------------- encryption

def encrypt_index(plain, enc_key: EncryptionKey,
                  rng: Optional[np.random.Generator] = None) -> EncryptedIndex:
    """Element-wise encryption of tag bits and occurrence bits.

    `plain` provides `.tags` (K KeywordTags) and `.bits` (K x F array over
    {0,1}); see indexer.PlainIndexMatrix.
    """
    rng = rng if rng is not None else engine._rng_from_seed(None)
    tags = list(plain.tags)
    bits = np.asarray(plain.bits, dtype=np.int64)
    k = len(tags)
    if k < 1:
        raise MalformedInput("index needs at least one keyword")
    if bits.ndim != 2 or bits.shape[0] != k:
        raise MalformedInput(f"occurrence matrix must be ({k}, F), got {bits.shape}")
    f = bits.shape[1]
    if not np.isin(bits, (0, 1)).all():
        raise MalformedInput("occurrence matrix entries must be 0/1")

    tag_bits = np.concatenate([t.bits() for t in tags])          # K*64
    flat = bits.reshape(-1)                                      # K*F
    payload = np.concatenate([tag_bits, flat, np.array([0, 1], dtype=np.int64)])
    cts = engine.encrypt_bits_public(payload, enc_key.pk, rng)
    kk = k * TAG_BITS
    return EncryptedIndex(
        profile=enc_key.profile, fingerprint=enc_key.fingerprint,
        keywords=k, files=f,
        tag_cts=cts[:kk],
        matrix_cts=cts[kk:kk + k * f],
        checksum_cts=cts[kk + k * f:],
    )


def encrypt_query_atom(keyword: str, enc_key: EncryptionKey,
                       rng: Optional[np.random.Generator] = None) -> EncryptedAtom:
    """Bitwise encryption of the keyword's tag. `keyword` must be canonical."""
    rng = rng if rng is not None else engine._rng_from_seed(None)
    tag = encode_keyword_tag(keyword)
    cts = engine.encrypt_bits_public(tag.bits(), enc_key.pk, rng)
    return EncryptedAtom(enc_key.profile, enc_key.fingerprint, cts)


def empty_result(enc_key: EncryptionKey,
                 rng: Optional[np.random.Generator] = None) -> EncryptedResultVector:
    """F=0 result with a fresh checksum pair; used when a patient has no files."""
    rng = rng if rng is not None else engine._rng_from_seed(None)
    checksum = engine.encrypt_bits_public(np.array([0, 1], dtype=np.int64), enc_key.pk, rng)
    bits = np.zeros((0, enc_key.profile.lwe_n + 1), dtype=np.int64)
    return EncryptedResultVector(enc_key.profile, enc_key.fingerprint, 0, bits, checksum)


# ------------------------------------------------------------- evaluation

def _check_keys(a_fp: bytes, b_fp: bytes) -> None:
    if a_fp != b_fp:
        raise KeyMismatch("query and index were encrypted under different key sets")


def eval_selector(atom: EncryptedAtom, index: EncryptedIndex,
                  ev: engine.Evaluator) -> np.ndarray:
    """K encrypted bits; bit k decrypts to 1 iff tag row k equals the atom."""
    _check_keys(atom.fingerprint, index.fingerprint)
    k = index.keywords
    tiled = np.tile(atom.cts, (k, 1))                 # (K*64, n+1)
    eq = ev.lxnor(tiled, index.tag_cts)               # bitwise equality
    # balanced AND reduction, 64 -> 1 per row
    width = TAG_BITS
    cur = eq.reshape(k, width, -1)
    while width > 1:
        half = width // 2
        left = cur[:, :half, :].reshape(k * half, -1)
        right = cur[:, half:, :].reshape(k * half, -1)
        cur = ev.land(left, right).reshape(k, half, -1)
        width = half
    return cur.reshape(k, -1)


def eval_mask_and_fold(selector: np.ndarray, index: EncryptedIndex,
                       ev: engine.Evaluator) -> EncryptedResultVector:
    """result[f] = OR_k (selector[k] AND matrix[k][f]), balanced OR tree."""
    k, f = index.keywords, index.files
    if selector.shape[0] != k:
        raise MalformedInput(f"selector length {selector.shape[0]} != K {k}")
    if f == 0:
        return EncryptedResultVector(index.profile, index.fingerprint, 0,
                                     np.zeros((0, selector.shape[1]), dtype=np.int64),
                                     index.checksum_cts.copy())
    sel_rep = np.repeat(selector, f, axis=0)          # (K*F, n+1)
    masked = ev.land(sel_rep, index.matrix_cts).reshape(k, f, -1)
    rows = k
    while rows > 1:
        half = rows // 2
        left = masked[0:2 * half:2].reshape(half * f, -1)
        right = masked[1:2 * half:2].reshape(half * f, -1)
        merged = ev.lor(left, right).reshape(half, f, -1)
        if rows % 2:
            merged = np.concatenate([merged, masked[-1:]], axis=0)
        masked = merged
        rows = masked.shape[0]
    return EncryptedResultVector(index.profile, index.fingerprint, f,
                                 masked.reshape(f, -1), index.checksum_cts.copy())


def eval_bool_combine(op: str, lhs: EncryptedResultVector,
                      rhs: Optional[EncryptedResultVector],
                      ev: engine.Evaluator) -> EncryptedResultVector:
    """Element-wise boolean combination of result vectors."""
    if op == "not":
        if rhs is not None:
            raise MalformedInput("NOT takes a single operand")
        return EncryptedResultVector(lhs.profile, lhs.fingerprint, lhs.files,
                                     ev.lnot(lhs.bits), lhs.checksum_cts.copy())
    if rhs is None:
        raise MalformedInput(f"{op.upper()} takes two operands")
    _check_keys(lhs.fingerprint, rhs.fingerprint)
    if lhs.files != rhs.files:
        raise MalformedInput(f"operand lengths differ: {lhs.files} vs {rhs.files}")
    if op == "or":
        bits = ev.lor(lhs.bits, rhs.bits)
    elif op == "and":
        bits = ev.land(lhs.bits, rhs.bits)
    else:
        raise MalformedInput(f"unknown boolean operator {op!r}")
    return EncryptedResultVector(lhs.profile, lhs.fingerprint, lhs.files,
                                 bits, lhs.checksum_cts.copy())


def eval_query(query: EncryptedQuery, index: EncryptedIndex,
               eval_key: EvaluationKey,
               ev: Optional[engine.Evaluator] = None) -> EncryptedResultVector:
    """Recursive evaluation of a boolean query over the encrypted index."""
    _check_keys(query.fingerprint, index.fingerprint)
    _check_keys(query.fingerprint, eval_key.fingerprint)
    validate_query_shape(query.ast)
    ev = ev if ev is not None else eval_key.evaluator()

    def walk(node: QueryNode) -> EncryptedResultVector:
        if isinstance(node, QueryLeaf):
            if index.files == 0:
                return EncryptedResultVector(
                    index.profile, index.fingerprint, 0,
                    np.zeros((0, index.checksum_cts.shape[1]), dtype=np.int64),
                    index.checksum_cts.copy())
            selector = eval_selector(node.atom, index, ev)
            return eval_mask_and_fold(selector, index, ev)
        if isinstance(node, QueryNot):
            return eval_bool_combine("not", walk(node.child), None, ev)
        return eval_bool_combine(node.op, walk(node.lhs), walk(node.rhs), ev)

    return walk(query.ast)


def decrypt_result(result: EncryptedResultVector, dec_key: DecryptionKey) -> np.ndarray:
    """Plaintext {0,1}^F. Checksum pair must decrypt to (0, 1)."""
    if not isinstance(dec_key, DecryptionKey):
        raise TypeError("decryption requires a DecryptionKey")
    if result.fingerprint != dec_key.fingerprint:
        raise KeyMismatch("result vector belongs to a different key set")
    check = engine.decrypt_bits(result.checksum_cts, dec_key.sk)
    if check[0] != 0 or check[1] != 1:
        raise KeyMismatch("checksum bits did not decrypt to (0, 1)")
    if result.files == 0:
        return np.zeros(0, dtype=np.int8)
    return engine.decrypt_bits(result.bits, dec_key.sk)


# ------------------------------------------------------------- test helpers

def decrypt_index(index: EncryptedIndex, dec_key: DecryptionKey):
    """(tag bit matrix (K,64), occurrence matrix (K,F)); for oracle tests."""
    if not isinstance(dec_key, DecryptionKey):
        raise TypeError("decryption requires a DecryptionKey")
    tag_bits = engine.decrypt_bits(index.tag_cts, dec_key.sk).reshape(index.keywords, TAG_BITS)
    matrix = engine.decrypt_bits(index.matrix_cts, dec_key.sk).reshape(
        index.keywords, index.files)
    return tag_bits, matrix


def decrypt_selector(selector: np.ndarray, dec_key: DecryptionKey) -> np.ndarray:
    return engine.decrypt_bits(selector, dec_key.sk)
