"""Cryptographic primitives: block ciphers, MACs, hash, signatures, KDF."""
from . import blockmac, simon, speck
from .errors import InvalidInput
from .mac import (
    KDF_CONTEXT,
    VALID_TAG_LENGTHS,
    MacAlgorithm,
    MacState,
    MacSuite,
    blake2s_keyed,
    cbc_mac,
    check_key,
    check_tag_length,
    compute_mac,
    derive_auth_key,
    hmac_sha256,
)
from .signing import SignatureKeyPair, sha256, sign, verify

__all__ = [
    "InvalidInput",
    "KDF_CONTEXT",
    "MacAlgorithm",
    "MacState",
    "MacSuite",
    "SignatureKeyPair",
    "VALID_TAG_LENGTHS",
    "blake2s_keyed",
    "blockmac",
    "cbc_mac",
    "check_key",
    "check_tag_length",
    "compute_mac",
    "derive_auth_key",
    "hmac_sha256",
    "sha256",
    "sign",
    "simon",
    "speck",
    "verify",
]
