"""Binary containers for ciphertexts and keys.

Every container starts with the same header: magic "SPHX", a version byte,
a profile id byte, the 16-byte key-set fingerprint, then dims K and F as
4-byte big-endian integers (zero where not meaningful). Payloads are typed
sections of big-endian uint32 arrays. Text transports carry these blobs as
standard base64.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import MalformedInput
from . import engine
from .circuits import (
    EncryptedAtom,
    EncryptedIndex,
    EncryptedQuery,
    EncryptedResultVector,
    QueryLeaf,
    QueryNode,
    QueryNot,
    QueryOp,
)
from .keys import DecryptionKey, EncryptionKey, EvaluationKey, _fingerprint
from .params import Profile, profile_by_id

MAGIC = b"SPHX"
VERSION = 1

KIND_INDEX = 1
KIND_QUERY = 2
KIND_RESULT = 3
KIND_ENC_KEY = 4
KIND_EVAL_KEY = 5
KIND_DEC_KEY = 6

_HEADER = struct.Struct(">4sBB16sII")
_NODE_OR, _NODE_AND, _NODE_NOT, _NODE_LEAF = 1, 2, 3, 4


def _pack_array(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr & engine.MASK)
    shape = arr.shape
    head = struct.pack(">B", len(shape)) + b"".join(struct.pack(">I", d) for d in shape)
    return head + arr.astype(">u4").tobytes()


class _Reader:
    def __init__(self, raw: bytes, pos: int = 0):
        self.raw = raw
        self.pos = pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise MalformedInput("truncated container")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def byte(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def array(self) -> np.ndarray:
        ndim = self.byte()
        if ndim > 4:
            raise MalformedInput("array rank too large")
        shape = tuple(self.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        if count > (1 << 28):
            raise MalformedInput("array too large")
        flat = np.frombuffer(self.take(4 * count), dtype=">u4")
        return flat.astype(np.int64).reshape(shape)

    def done(self) -> None:
        if self.pos != len(self.raw):
            raise MalformedInput("trailing bytes after container payload")


def _header(kind_profile: Profile, fingerprint: bytes, k: int, f: int) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, kind_profile.profile_id, fingerprint, k, f)


def _parse_header(reader: _Reader):
    magic, version, profile_id, fingerprint, k, f = _HEADER.unpack(reader.take(_HEADER.size))
    if magic != MAGIC:
        raise MalformedInput("bad container magic")
    if version != VERSION:
        raise MalformedInput(f"unsupported container version {version}")
    return profile_by_id(profile_id), fingerprint, k, f


def peek_header(raw: bytes):
    """(profile, fingerprint, K, F, kind) without deserializing the payload."""
    reader = _Reader(raw)
    profile, fingerprint, k, f = _parse_header(reader)
    kind = reader.byte()
    return profile, fingerprint, k, f, kind


# ------------------------------------------------------------- ciphertexts

def serialize_index(index: EncryptedIndex) -> bytes:
    return (_header(index.profile, index.fingerprint, index.keywords, index.files)
            + bytes([KIND_INDEX])
            + _pack_array(index.tag_cts)
            + _pack_array(index.matrix_cts)
            + _pack_array(index.checksum_cts))


def deserialize_index(raw: bytes) -> EncryptedIndex:
    reader = _Reader(raw)
    profile, fingerprint, k, f = _parse_header(reader)
    if reader.byte() != KIND_INDEX:
        raise MalformedInput("container is not an encrypted index")
    tag_cts = reader.array()
    matrix_cts = reader.array()
    checksum = reader.array()
    reader.done()
    width = profile.lwe_n + 1
    if tag_cts.shape != (k * 64, width) or matrix_cts.shape != (k * f, width) \
            or checksum.shape != (2, width):
        raise MalformedInput("index container dims are inconsistent")
    return EncryptedIndex(profile, fingerprint, k, f, tag_cts, matrix_cts, checksum)


def serialize_query(query: EncryptedQuery) -> bytes:
    parts = [bytes([KIND_QUERY])]

    def emit(node: QueryNode) -> None:
        if isinstance(node, QueryLeaf):
            parts.append(bytes([_NODE_LEAF]))
            parts.append(_pack_array(node.atom.cts))
        elif isinstance(node, QueryNot):
            parts.append(bytes([_NODE_NOT]))
            emit(node.child)
        else:
            parts.append(bytes([_NODE_OR if node.op == "or" else _NODE_AND]))
            emit(node.lhs)
            emit(node.rhs)

    emit(query.ast)
    return _header(query.profile, query.fingerprint, 0, 0) + b"".join(parts)


def deserialize_query(raw: bytes) -> EncryptedQuery:
    reader = _Reader(raw)
    profile, fingerprint, _, _ = _parse_header(reader)
    if reader.byte() != KIND_QUERY:
        raise MalformedInput("container is not an encrypted query")
    width = profile.lwe_n + 1

    def parse(depth: int) -> QueryNode:
        if depth > 64:
            raise MalformedInput("query nesting too deep")
        tag = reader.byte()
        if tag == _NODE_LEAF:
            cts = reader.array()
            if cts.shape != (64, width):
                raise MalformedInput("query atom dims are inconsistent")
            return QueryLeaf(EncryptedAtom(profile, fingerprint, cts))
        if tag == _NODE_NOT:
            return QueryNot(parse(depth + 1))
        if tag in (_NODE_OR, _NODE_AND):
            return QueryOp("or" if tag == _NODE_OR else "and",
                           parse(depth + 1), parse(depth + 1))
        raise MalformedInput(f"unknown query node tag {tag}")

    ast = parse(0)
    reader.done()
    return EncryptedQuery(profile, fingerprint, ast)


def serialize_result(result: EncryptedResultVector) -> bytes:
    return (_header(result.profile, result.fingerprint, 0, result.files)
            + bytes([KIND_RESULT])
            + _pack_array(result.bits)
            + _pack_array(result.checksum_cts))


def deserialize_result(raw: bytes) -> EncryptedResultVector:
    reader = _Reader(raw)
    profile, fingerprint, _, f = _parse_header(reader)
    if reader.byte() != KIND_RESULT:
        raise MalformedInput("container is not a result vector")
    bits = reader.array()
    checksum = reader.array()
    reader.done()
    width = profile.lwe_n + 1
    if bits.shape != (f, width) or checksum.shape != (2, width):
        raise MalformedInput("result container dims are inconsistent")
    return EncryptedResultVector(profile, fingerprint, f, bits, checksum)


# ------------------------------------------------------------- key blobs

def serialize_enc_key(key: EncryptionKey) -> bytes:
    return (_header(key.profile, key.fingerprint, 0, 0)
            + bytes([KIND_ENC_KEY]) + _pack_array(key.pk.samples))


def deserialize_enc_key(raw: bytes) -> EncryptionKey:
    reader = _Reader(raw)
    profile, fingerprint, _, _ = _parse_header(reader)
    if reader.byte() != KIND_ENC_KEY:
        raise MalformedInput("container is not an encryption key")
    samples = reader.array()
    reader.done()
    if samples.shape != (profile.pk_rows, profile.lwe_n + 1):
        raise MalformedInput("encryption key dims are inconsistent")
    if _fingerprint(profile, samples) != fingerprint:
        raise MalformedInput("encryption key fingerprint mismatch")
    return EncryptionKey(profile, engine.PublicKey(profile, samples), fingerprint)


def serialize_eval_key(key: EvaluationKey) -> bytes:
    return (_header(key.profile, key.fingerprint, 0, 0)
            + bytes([KIND_EVAL_KEY])
            + _pack_array(key.bk.bsk) + _pack_array(key.bk.ksk))


def deserialize_eval_key(raw: bytes) -> EvaluationKey:
    reader = _Reader(raw)
    profile, fingerprint, _, _ = _parse_header(reader)
    if reader.byte() != KIND_EVAL_KEY:
        raise MalformedInput("container is not an evaluation key")
    bsk = reader.array()
    ksk = reader.array()
    reader.done()
    if bsk.shape != (profile.lwe_n, profile.decomp_rows, profile.glwe_k + 1, profile.glwe_N):
        raise MalformedInput("bootstrap key dims are inconsistent")
    if ksk.shape != (profile.extracted_n * profile.ks_levels, profile.lwe_n + 1):
        raise MalformedInput("key-switch key dims are inconsistent")
    return EvaluationKey(profile, engine.BootstrapKey(profile, bsk, ksk), fingerprint)


def serialize_dec_key(key: DecryptionKey) -> bytes:
    """For the patient's local keystore only; the server never accepts this kind."""
    return (_header(key.profile, key.fingerprint, 0, 0)
            + bytes([KIND_DEC_KEY]) + _pack_array(key.sk.s))


def deserialize_dec_key(raw: bytes) -> DecryptionKey:
    reader = _Reader(raw)
    profile, fingerprint, _, _ = _parse_header(reader)
    if reader.byte() != KIND_DEC_KEY:
        raise MalformedInput("container is not a decryption key")
    s = reader.array()
    reader.done()
    if s.shape != (profile.lwe_n,):
        raise MalformedInput("decryption key dims are inconsistent")
    return DecryptionKey(profile, engine.SecretKey(profile, s), fingerprint)
