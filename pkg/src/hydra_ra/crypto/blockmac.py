"""CBC-MAC over Speck, Simon, and AES.

Construction (fixed here because plain CBC-MAC is insecure for
variable-length input): the chain starts with one block holding the message
byte length big-endian, the tail is zero-padded to the block size, and the
tag is the final chaining value extended, if more bytes are needed, by
re-encrypting it.

The Speck/Simon chains have numba-compiled bulk kernels; the scalar Python
path is kept as an always-available fallback and as the second route for the
equivalence tests.
"""
from __future__ import annotations

import struct
import sys

import numpy as np

from . import simon, speck
from .errors import InvalidInput

try:
    from numba import njit, uint64

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_WORD_MASK = 0xFFFFFFFF
_LITTLE_ENDIAN = sys.byteorder == "little"


def _pad(message: bytes, block_size: int) -> bytes:
    prefix = len(message).to_bytes(block_size, "big")
    tail = -len(message) % block_size
    return prefix + bytes(message) + bytes(tail)


# ---------------------------------------------------------------------------
# Scalar chains (reference path)
# ---------------------------------------------------------------------------

def _chain64_scalar(encrypt_words, round_keys, padded: bytes) -> bytes:
    cx = cy = 0
    for off in range(0, len(padded), 8):
        x, y = struct.unpack_from(">2I", padded, off)
        cx, cy = encrypt_words(round_keys, x ^ cx, y ^ cy)
    return struct.pack(">2I", cx, cy)


def speck_cbc_final_scalar(key: bytes, message: bytes) -> bytes:
    ks = speck.expand_key(key)
    return _chain64_scalar(speck.encrypt_words, ks, _pad(message, 8))


def simon_cbc_final_scalar(key: bytes, message: bytes) -> bytes:
    ks = simon.expand_key(key)
    return _chain64_scalar(simon.encrypt_words, ks, _pad(message, 8))


# ---------------------------------------------------------------------------
# Bulk chains (numba)
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    # The kernels read the message buffer in place as native uint32 pairs
    # and swap to big-endian themselves: no size-proportional temporaries,
    # which keeps large-input timing allocation-free.

    @njit(cache=True, nogil=True)
    def _speck_chain_kernel(ks, words, cx, cy):  # pragma: no cover - jit
        mask = uint64(0xFFFFFFFF)
        lo = uint64(0xFF)
        mid = uint64(0xFF00)
        n = words.shape[0] // 2
        for i in range(n):
            wx = uint64(words[2 * i])
            wy = uint64(words[2 * i + 1])
            x = (((wx & lo) << uint64(24)) | ((wx & mid) << uint64(8))
                 | ((wx >> uint64(8)) & mid) | ((wx >> uint64(24)) & lo)) ^ cx
            y = (((wy & lo) << uint64(24)) | ((wy & mid) << uint64(8))
                 | ((wy >> uint64(8)) & mid) | ((wy >> uint64(24)) & lo)) ^ cy
            for r in range(27):
                x = ((((x >> uint64(8)) | (x << uint64(24))) & mask) + y) & mask ^ ks[r]
                y = (((y << uint64(3)) | (y >> uint64(29))) & mask) ^ x
            cx = x
            cy = y
        return cx, cy

    @njit(cache=True, nogil=True)
    def _simon_chain_kernel(ks, words, cx, cy):  # pragma: no cover - jit
        mask = uint64(0xFFFFFFFF)
        lo = uint64(0xFF)
        mid = uint64(0xFF00)
        n = words.shape[0] // 2
        for i in range(n):
            wx = uint64(words[2 * i])
            wy = uint64(words[2 * i + 1])
            x = (((wx & lo) << uint64(24)) | ((wx & mid) << uint64(8))
                 | ((wx >> uint64(8)) & mid) | ((wx >> uint64(24)) & lo)) ^ cx
            y = (((wy & lo) << uint64(24)) | ((wy & mid) << uint64(8))
                 | ((wy >> uint64(8)) & mid) | ((wy >> uint64(24)) & lo)) ^ cy
            for r in range(44):
                f = ((((x << uint64(1)) | (x >> uint64(31))) & mask)
                     & (((x << uint64(8)) | (x >> uint64(24))) & mask)) \
                    ^ (((x << uint64(2)) | (x >> uint64(30))) & mask)
                x, y = (y ^ f ^ ks[r]) & mask, x
            cx = x
            cy = y
        return cx, cy


def _chain64(encrypt_words, kernel, round_keys, message: bytes) -> bytes:
    """Length-prefix block, then the message, zero-padded; IV is zero.

    Equivalent to _chain64_scalar over _pad(message, 8): the prefix block
    and any ragged tail run through the scalar round function, the aligned
    middle through the bulk kernel when numba is available.
    """
    length = len(message)
    cx, cy = encrypt_words(round_keys, (length >> 32) & _WORD_MASK,
                           length & _WORD_MASK)
    full = length // 8
    done = full * 8
    if full:
        words = np.frombuffer(message, dtype=np.uint32, count=full * 2)
        if kernel is not None and _LITTLE_ENDIAN:
            ks = np.array(round_keys, dtype=np.uint64)
            cx64, cy64 = kernel(ks, words, np.uint64(cx), np.uint64(cy))
            cx, cy = int(cx64), int(cy64)
        else:
            for off in range(0, done, 8):
                x, y = struct.unpack_from(">2I", message, off)
                cx, cy = encrypt_words(round_keys, x ^ cx, y ^ cy)
    if done < length:
        tail = message[done:] + bytes(8 - (length - done))
        x, y = struct.unpack(">2I", tail)
        cx, cy = encrypt_words(round_keys, x ^ cx, y ^ cy)
    return struct.pack(">2I", cx, cy)


def speck_cbc_final(key: bytes, message: bytes) -> bytes:
    """Final CBC chaining block of the length-prefixed Speck chain."""
    ks = speck.expand_key(key)
    kernel = _speck_chain_kernel if _HAVE_NUMBA else None
    return _chain64(speck.encrypt_words, kernel, ks, message)


def simon_cbc_final(key: bytes, message: bytes) -> bytes:
    """Final CBC chaining block of the length-prefixed Simon chain."""
    ks = simon.expand_key(key)
    kernel = _simon_chain_kernel if _HAVE_NUMBA else None
    return _chain64(simon.encrypt_words, kernel, ks, message)


def aes_cbc_final(key: bytes, message: bytes) -> bytes:
    """Final CBC chaining block of the length-prefixed AES-128 chain.

    The message is fed to the cipher in place, chunk by chunk, instead of
    materializing the padded buffer; only the final block is kept.
    """
    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

    if len(key) != 16:
        raise InvalidInput(f"aes-128 key must be 16 bytes, got {len(key)}")
    enc = Cipher(algorithms.AES(key), modes.CBC(bytes(16))).encryptor()
    last = enc.update(len(message).to_bytes(16, "big"))[-16:]
    view = memoryview(message)
    chunk = 1 << 20
    for offset in range(0, len(view), chunk):
        out = enc.update(view[offset:offset + chunk])
        if out:
            last = out[-16:]
    tail = -len(message) % 16
    if tail:
        out = enc.update(bytes(tail))
        if out:
            last = out[-16:]
    enc.finalize()
    return bytes(last)


def extend_tag(final_block: bytes, encrypt_block, key: bytes, tag_length: int) -> bytes:
    """Stretch the chaining value by repeated encryption, then truncate."""
    out = final_block
    while len(out) < tag_length:
        final_block = encrypt_block(key, final_block)
        out += final_block
    return out[:tag_length]


def warm_up() -> None:
    """Trigger JIT compilation of the bulk kernels (idempotent)."""
    speck_cbc_final(bytes(16), b"warm")
    simon_cbc_final(bytes(16), b"warm")
