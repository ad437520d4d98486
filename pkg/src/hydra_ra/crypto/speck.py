"""Speck-64/128 block cipher.

64-bit block, 128-bit key, 27 rounds, rotation constants (8, 3). Words are
32-bit; the byte interface packs (x, y) big-endian, so the published hex
vectors can be used verbatim.
"""
from __future__ import annotations

import struct

from .errors import InvalidInput

ROUNDS = 27
BLOCK_SIZE = 8
KEY_SIZE = 16

_MASK = 0xFFFFFFFF


def _ror8(x: int) -> int:
    return ((x >> 8) | (x << 24)) & _MASK


def _rol3(x: int) -> int:
    return ((x << 3) | (x >> 29)) & _MASK


def _rol8(x: int) -> int:
    return ((x << 8) | (x >> 24)) & _MASK


def _ror3(x: int) -> int:
    return ((x >> 3) | (x << 29)) & _MASK


def expand_key(key: bytes) -> tuple[int, ...]:
    """Derive the 27 round keys from a 16-byte master key."""
    if len(key) != KEY_SIZE:
        raise InvalidInput(f"speck-64/128 key must be {KEY_SIZE} bytes, got {len(key)}")
    l2, l1, l0, k0 = struct.unpack(">4I", key)
    ls = [l0, l1, l2]
    ks = [k0]
    for i in range(ROUNDS - 1):
        l_new = ((ks[i] + _ror8(ls[i])) & _MASK) ^ i
        ks.append(_rol3(ks[i]) ^ l_new)
        ls.append(l_new)
    return tuple(ks)


def encrypt_words(round_keys: tuple[int, ...], x: int, y: int) -> tuple[int, int]:
    for k in round_keys:
        x = (((_ror8(x) + y) & _MASK)) ^ k
        y = _rol3(y) ^ x
    return x, y


def decrypt_words(round_keys: tuple[int, ...], x: int, y: int) -> tuple[int, int]:
    for k in reversed(round_keys):
        y = _ror3(y ^ x)
        x = _rol8(((x ^ k) - y) & _MASK)
    return x, y


def _check_block(block: bytes) -> None:
    if len(block) != BLOCK_SIZE:
        raise InvalidInput(f"speck-64/128 block must be {BLOCK_SIZE} bytes, got {len(block)}")


def encrypt_block(key: bytes, block: bytes) -> bytes:
    _check_block(block)
    x, y = struct.unpack(">2I", block)
    x, y = encrypt_words(expand_key(key), x, y)
    return struct.pack(">2I", x, y)


def decrypt_block(key: bytes, block: bytes) -> bytes:
    _check_block(block)
    x, y = struct.unpack(">2I", block)
    x, y = decrypt_words(expand_key(key), x, y)
    return struct.pack(">2I", x, y)
