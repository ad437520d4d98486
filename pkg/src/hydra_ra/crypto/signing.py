"""Hash and digital-signature primitives for the boot chain.

Ed25519 (raw 32-byte keys, 64-byte signatures) and SHA-256. Verification is
total: malformed signatures or messages yield False, never an exception.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import InvalidInput

PUBLIC_KEY_SIZE = 32
PRIVATE_KEY_SIZE = 32
SIGNATURE_SIZE = 64


def sha256(message: bytes) -> bytes:
    return hashlib.sha256(message).digest()


@dataclass(frozen=True)
class SignatureKeyPair:
    private_key: bytes
    public_key: bytes

    @classmethod
    def generate(cls) -> "SignatureKeyPair":
        sk = Ed25519PrivateKey.generate()
        return cls(
            private_key=sk.private_bytes_raw(),
            public_key=sk.public_key().public_bytes_raw(),
        )

    @classmethod
    def from_private_bytes(cls, private_key: bytes) -> "SignatureKeyPair":
        if len(private_key) != PRIVATE_KEY_SIZE:
            raise InvalidInput(f"private key must be {PRIVATE_KEY_SIZE} bytes")
        sk = Ed25519PrivateKey.from_private_bytes(private_key)
        return cls(private_key=bytes(private_key),
                   public_key=sk.public_key().public_bytes_raw())


def sign(private_key: bytes, message: bytes) -> bytes:
    if len(private_key) != PRIVATE_KEY_SIZE:
        raise InvalidInput(f"private key must be {PRIVATE_KEY_SIZE} bytes")
    return Ed25519PrivateKey.from_private_bytes(private_key).sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_SIZE:
        raise InvalidInput(f"public key must be {PUBLIC_KEY_SIZE} bytes")
    try:
        pk = Ed25519PublicKey.from_public_bytes(public_key)
    except ValueError as exc:
        raise InvalidInput("malformed public key") from exc
    try:
        pk.verify(signature, message)
        return True
    except (InvalidSignature, ValueError, TypeError):
        return False
