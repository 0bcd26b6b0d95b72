"""Length-prefixed binary framing shared by the re-encryption types."""

from __future__ import annotations

import struct

from ..errors import MalformedInput

_LEN = struct.Struct(">I")


def pack_frames(*fields: bytes) -> bytes:
    out = bytearray()
    for field in fields:
        out += _LEN.pack(len(field))
        out += field
    return bytes(out)


def unpack_frames(raw: bytes, expected: int) -> list[bytes]:
    fields = []
    pos = 0
    for _ in range(expected):
        if pos + _LEN.size > len(raw):
            raise MalformedInput("truncated frame header")
        (n,) = _LEN.unpack_from(raw, pos)
        pos += _LEN.size
        if pos + n > len(raw):
            raise MalformedInput("truncated frame body")
        fields.append(raw[pos:pos + n])
        pos += n
    if pos != len(raw):
        raise MalformedInput("trailing bytes after frames")
    return fields
