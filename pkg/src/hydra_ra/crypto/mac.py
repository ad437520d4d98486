"""MAC algorithm registry, one-shot and incremental interfaces, key derivation.

Five algorithms: CBC-MAC over Speck-64/128, Simon-64/128 and AES-128, plus
HMAC-SHA-256 and keyed BLAKE2s. Cipher MACs take 16-byte keys and emit
16-byte tags by default; hash MACs take 32-byte keys and emit 32-byte tags.
Tags may be truncated to 8 bytes, never extended past the native size.
"""
from __future__ import annotations

import hashlib
import hmac as _hmac
from dataclasses import dataclass
from enum import Enum

from . import blockmac, simon, speck
from .errors import InvalidInput

KDF_CONTEXT = b"HYDRA-KAUTH-v1"

VALID_TAG_LENGTHS = (8, 16, 32)


class MacAlgorithm(Enum):
    SPECK_64_128_CBC = "SPECK_64_128_CBC"
    SIMON_64_128_CBC = "SIMON_64_128_CBC"
    AES_128_CBC = "AES_128_CBC"
    HMAC_SHA_256 = "HMAC_SHA_256"
    BLAKE2S_KEYED = "BLAKE2S_KEYED"

    @property
    def is_cipher_based(self) -> bool:
        return self in (MacAlgorithm.SPECK_64_128_CBC,
                        MacAlgorithm.SIMON_64_128_CBC,
                        MacAlgorithm.AES_128_CBC)

    @property
    def key_size(self) -> int:
        return 16 if self.is_cipher_based else 32

    @property
    def native_tag_size(self) -> int:
        return 16 if self.is_cipher_based else 32

    @property
    def default_tag_length(self) -> int:
        return self.native_tag_size


def check_key(algorithm: MacAlgorithm, key: bytes) -> bytes:
    if len(key) == 0:
        raise InvalidInput("zero-length MAC key")
    if len(key) != algorithm.key_size:
        raise InvalidInput(
            f"{algorithm.value} key must be {algorithm.key_size} bytes, got {len(key)}")
    return bytes(key)


def check_tag_length(algorithm: MacAlgorithm, tag_length: int) -> int:
    if tag_length not in VALID_TAG_LENGTHS or tag_length > algorithm.native_tag_size:
        raise InvalidInput(
            f"tag length {tag_length} invalid for {algorithm.value}")
    return tag_length


def compute_mac(algorithm: MacAlgorithm, key: bytes, message: bytes,
                tag_length: int | None = None) -> bytes:
    """One-shot MAC of `message` under `key`."""
    check_key(algorithm, key)
    tag_length = check_tag_length(
        algorithm, algorithm.default_tag_length if tag_length is None else tag_length)
    if algorithm is MacAlgorithm.SPECK_64_128_CBC:
        final = blockmac.speck_cbc_final(key, message)
        return blockmac.extend_tag(final, speck.encrypt_block, key, tag_length)
    if algorithm is MacAlgorithm.SIMON_64_128_CBC:
        final = blockmac.simon_cbc_final(key, message)
        return blockmac.extend_tag(final, simon.encrypt_block, key, tag_length)
    if algorithm is MacAlgorithm.AES_128_CBC:
        return blockmac.aes_cbc_final(key, message)[:tag_length]
    if algorithm is MacAlgorithm.HMAC_SHA_256:
        return _hmac.new(key, message, hashlib.sha256).digest()[:tag_length]
    if algorithm is MacAlgorithm.BLAKE2S_KEYED:
        return hashlib.blake2s(message, key=key).digest()[:tag_length]
    raise InvalidInput(f"unknown algorithm {algorithm!r}")


def cbc_mac(key: bytes, algorithm: MacAlgorithm, message: bytes,
            tag_length: int | None = None) -> bytes:
    """One-shot cipher-based CBC-MAC; rejects hash-based algorithms."""
    if not algorithm.is_cipher_based:
        raise InvalidInput(f"{algorithm.value} is not a cipher-based MAC")
    return compute_mac(algorithm, key, message, tag_length)


# Raw primitives. Any key HMAC/BLAKE2s accept is accepted here; the 32-byte
# device key rule lives in compute_mac.
def hmac_sha256(key: bytes, message: bytes) -> bytes:
    return _hmac.new(key, message, hashlib.sha256).digest()


def blake2s_keyed(key: bytes, message: bytes) -> bytes:
    return hashlib.blake2s(message, key=key).digest()


class MacState:
    """Incremental MAC: init, any sequence of updates, final.

    Chunking never changes the tag. The cipher-based chains prepend the total
    message length, so those variants buffer updates and run the chain at
    final time; the hash-based variants stream directly.
    """

    def __init__(self, algorithm: MacAlgorithm, key: bytes,
                 tag_length: int | None = None):
        self.algorithm = algorithm
        self._key = check_key(algorithm, key)
        self.tag_length = check_tag_length(
            algorithm, algorithm.default_tag_length if tag_length is None else tag_length)
        self._finished = False
        self._chunks: list[bytes] | None = None
        self._hasher = None
        if algorithm is MacAlgorithm.HMAC_SHA_256:
            self._hasher = _hmac.new(key, digestmod=hashlib.sha256)
        elif algorithm is MacAlgorithm.BLAKE2S_KEYED:
            self._hasher = hashlib.blake2s(key=key)
        else:
            self._chunks = []

    def update(self, data: bytes) -> None:
        if self._finished:
            raise InvalidInput("MacState already finalized")
        if self._hasher is not None:
            self._hasher.update(data)
        else:
            self._chunks.append(bytes(data))

    def final(self) -> bytes:
        if self._finished:
            raise InvalidInput("MacState already finalized")
        self._finished = True
        if self._hasher is not None:
            return self._hasher.digest()[:self.tag_length]
        message = b"".join(self._chunks)
        self._chunks = None
        return compute_mac(self.algorithm, self._key, message, self.tag_length)


def derive_auth_key(algorithm: MacAlgorithm, master_key: bytes) -> bytes:
    """Request-authentication key derived from the attestation master key.

    MAC of a fixed context string under the master key, expanded with a
    counter suffix if one block is not enough, cut to the key size.
    """
    check_key(algorithm, master_key)
    out = b""
    counter = 0
    while len(out) < algorithm.key_size:
        msg = KDF_CONTEXT if counter == 0 else KDF_CONTEXT + bytes([counter])
        out += compute_mac(algorithm, master_key, msg,
                           algorithm.native_tag_size)
        counter += 1
    derived = out[:algorithm.key_size]
    if derived == master_key:  # astronomically unlikely; contract demands it
        raise InvalidInput("derived key collided with master key")
    return derived


@dataclass(frozen=True)
class MacSuite:
    """Algorithm plus both keys, as carried in configs."""
    algorithm: MacAlgorithm
    master_key: bytes
    auth_key: bytes
    tag_length: int

    @classmethod
    def build(cls, algorithm: MacAlgorithm, master_key: bytes,
              auth_key: bytes | None = None,
              tag_length: int | None = None) -> "MacSuite":
        check_key(algorithm, master_key)
        if auth_key is None:
            auth_key = derive_auth_key(algorithm, master_key)
        else:
            check_key(algorithm, auth_key)
        tag_length = check_tag_length(
            algorithm, algorithm.default_tag_length if tag_length is None else tag_length)
        return cls(algorithm, bytes(master_key), bytes(auth_key), tag_length)
