"""Bit-level homomorphic search: keys, circuits, and wire containers."""

from . import containers, engine
from .circuits import (
    EncryptedAtom,
    EncryptedIndex,
    EncryptedQuery,
    EncryptedResultVector,
    QueryLeaf,
    QueryNode,
    QueryNot,
    QueryOp,
    decrypt_index,
    decrypt_result,
    decrypt_selector,
    empty_result,
    encrypt_index,
    encrypt_query_atom,
    eval_bool_combine,
    eval_mask_and_fold,
    eval_query,
    eval_selector,
)
from .keys import DecryptionKey, EncryptionKey, EvaluationKey, KeySet, generate_keys
from .params import STANDARD_128, TEST_FAST, Profile, get_profile
from .tags import TAG_BITS, KeywordTag, encode_keyword_tag

__all__ = [
    "DecryptionKey",
    "EncryptedAtom",
    "EncryptedIndex",
    "EncryptedQuery",
    "EncryptedResultVector",
    "EncryptionKey",
    "EvaluationKey",
    "KeySet",
    "KeywordTag",
    "Profile",
    "QueryLeaf",
    "QueryNode",
    "QueryNot",
    "QueryOp",
    "STANDARD_128",
    "TAG_BITS",
    "TEST_FAST",
    "containers",
    "decrypt_index",
    "decrypt_result",
    "decrypt_selector",
    "empty_result",
    "encode_keyword_tag",
    "encrypt_index",
    "encrypt_query_atom",
    "engine",
    "eval_bool_combine",
    "eval_mask_and_fold",
    "eval_query",
    "eval_selector",
    "generate_keys",
    "get_profile",
]
