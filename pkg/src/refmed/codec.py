"""Low-level binary encoding helpers shared by the on-disk index formats.

All multi-byte integers are little-endian. Variable-length integers use
unsigned LEB128. Strings are UTF-8, length-prefixed with a varint.
"""

from __future__ import annotations

import struct
from io import BytesIO


class CodecError(ValueError):
    """Raised when a byte stream does not decode cleanly."""


def write_varint(buf: BytesIO, value: int) -> None:
    if value < 0:
        raise CodecError(f"varint must be non-negative, got {value}")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.write(bytes((byte | 0x80,)))
        else:
            buf.write(bytes((byte,)))
            return


def read_varint(buf: BytesIO) -> int:
    shift = 0
    result = 0
    while True:
        raw = buf.read(1)
        if not raw:
            raise CodecError("truncated varint")
        byte = raw[0]
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result
        shift += 7
        if shift > 63:
            raise CodecError("varint too long")


def write_str(buf: BytesIO, text: str) -> None:
    data = text.encode("utf-8")
    write_varint(buf, len(data))
    buf.write(data)


def read_str(buf: BytesIO) -> str:
    length = read_varint(buf)
    data = buf.read(length)
    if len(data) != length:
        raise CodecError("truncated string")
    return data.decode("utf-8")


def write_u32(buf: BytesIO, value: int) -> None:
    buf.write(struct.pack("<I", value))


def read_u32(buf: BytesIO) -> int:
    data = buf.read(4)
    if len(data) != 4:
        raise CodecError("truncated u32")
    return struct.unpack("<I", data)[0]


def write_u64(buf: BytesIO, value: int) -> None:
    buf.write(struct.pack("<Q", value))


def read_u64(buf: BytesIO) -> int:
    data = buf.read(8)
    if len(data) != 8:
        raise CodecError("truncated u64")
    return struct.unpack("<Q", data)[0]


def write_f64(buf: BytesIO, value: float) -> None:
    buf.write(struct.pack("<d", value))


def read_f64(buf: BytesIO) -> float:
    data = buf.read(8)
    if len(data) != 8:
        raise CodecError("truncated f64")
    return struct.unpack("<d", data)[0]


def expect_magic(buf: BytesIO, magic: bytes, what: str) -> None:
    got = buf.read(len(magic))
    if got != magic:
        raise CodecError(f"bad magic for {what}: expected {magic!r}, got {got!r}")
