"""LEB128 varint encoding and CRC32 helpers for the on-disk index."""

from __future__ import annotations

import zlib

from termweight.errors import IndexFormatError


def write_uvarint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError(f"varint value must be non-negative, got {value}")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def read_uvarint(data: bytes | memoryview, pos: int) -> tuple[int, int]:
    """Decode one varint at ``pos``; returns (value, next position)."""
    value = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise IndexFormatError("truncated varint in postings data")
        byte = data[pos]
        pos += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise IndexFormatError("varint longer than 64 bits")


def crc32_hex(data: bytes) -> str:
    return f"{zlib.crc32(data) & 0xFFFFFFFF:08x}"
