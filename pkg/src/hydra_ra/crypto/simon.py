"""Simon-64/128 block cipher.

64-bit block, 128-bit key, 44 rounds, constant sequence z3. Same byte
conventions as the Speck module: (x, y) packed big-endian.
"""
from __future__ import annotations

import struct

from .errors import InvalidInput

ROUNDS = 44
BLOCK_SIZE = 8
KEY_SIZE = 16

_MASK = 0xFFFFFFFF

# z3 period-62 bit sequence for the 4-word key schedule.
_Z3 = [int(b) for b in
       "11011011101011000110010111100000010010001010011100110100001111"]


def _rol(x: int, r: int) -> int:
    return ((x << r) | (x >> (32 - r))) & _MASK


def _ror(x: int, r: int) -> int:
    return ((x >> r) | (x << (32 - r))) & _MASK


def expand_key(key: bytes) -> tuple[int, ...]:
    """Derive the 44 round keys from a 16-byte master key."""
    if len(key) != KEY_SIZE:
        raise InvalidInput(f"simon-64/128 key must be {KEY_SIZE} bytes, got {len(key)}")
    k3, k2, k1, k0 = struct.unpack(">4I", key)
    ks = [k0, k1, k2, k3]
    for i in range(4, ROUNDS):
        tmp = _ror(ks[i - 1], 3) ^ ks[i - 3]
        tmp ^= _ror(tmp, 1)
        ks.append((~ks[i - 4] & _MASK) ^ tmp ^ _Z3[(i - 4) % 62] ^ 3)
    return tuple(ks)


def _round(x: int, y: int, k: int) -> tuple[int, int]:
    return y ^ (_rol(x, 1) & _rol(x, 8)) ^ _rol(x, 2) ^ k, x


def encrypt_words(round_keys: tuple[int, ...], x: int, y: int) -> tuple[int, int]:
    for k in round_keys:
        x, y = _round(x, y, k)
    return x, y


def decrypt_words(round_keys: tuple[int, ...], x: int, y: int) -> tuple[int, int]:
    # The round function is an involution up to swapping the halves.
    for k in reversed(round_keys):
        y, x = _round(y, x, k)
    return x, y


def _check_block(block: bytes) -> None:
    if len(block) != BLOCK_SIZE:
        raise InvalidInput(f"simon-64/128 block must be {BLOCK_SIZE} bytes, got {len(block)}")


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
