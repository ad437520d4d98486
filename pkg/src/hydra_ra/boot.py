"""Secure boot chain for the simulated prover.

Boot images are a single container:

    [u32 len][kernel blob]
    [u32 len][attestation blob digest, SHA-256]
    [u32 len][attestation blob]
    [u32 len][signing public key, Ed25519]
    [u32 len][signature over kernel blob || digest, Ed25519]

All lengths are big-endian and the container must consume exactly. The ROM
holds only a fused digest of the expected public key; it verifies the
embedded key against that digest, then the signature over the kernel blob
and the attestation digest. The verified kernel in turn hashes the
attestation blob against the signed digest before handing over control.
Platform bring-up happens only at the end of this chain; nothing else in
the package constructs a kernel.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

from . import platform
from .crypto import SignatureKeyPair, sha256, sign, verify

_LEN = struct.Struct(">I")

PUBKEY_SIZE = 32
SIGNATURE_SIZE = 64
DIGEST_SIZE = 32


class BootFailure(Enum):
    MALFORMED_IMAGE = "malformed_image"
    PK_MISMATCH = "pk_mismatch"
    BAD_SIGNATURE = "bad_signature"
    ATTEST_HASH_MISMATCH = "attest_hash_mismatch"


class BootRefused(Exception):
    """The device stops instead of running unverified code."""

    def __init__(self, reason: BootFailure, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)


@dataclass(frozen=True)
class BootImage:
    kernel_blob: bytes
    attest_digest: bytes
    attest_blob: bytes
    public_key: bytes
    signature: bytes

    @property
    def signed_region(self) -> bytes:
        return self.kernel_blob + self.attest_digest


@dataclass
class FusedRom:
    """One-time-programmable first stage: key digest and code version.

    Conceptually write-once; mutating an instance after construction is a
    harness-only act standing in for manufacturing.
    """

    pk_digest: bytes
    version_tag: str = "rom-1"
    # Sabotage switch used by the adversary harness to show what the chain
    # is worth without its signature step. Never set in production paths.
    _skip_signature_check: bool = field(default=False, repr=False)

    @classmethod
    def for_keypair(cls, keypair: SignatureKeyPair) -> "FusedRom":
        return cls(pk_digest=sha256(keypair.public_key))


def pack_boot_image(kernel_blob: bytes, attest_blob: bytes,
                    keypair: SignatureKeyPair) -> bytes:
    digest = sha256(attest_blob)
    signature = sign(keypair.private_key, kernel_blob + digest)
    parts = []
    for blob in (kernel_blob, digest, attest_blob, keypair.public_key, signature):
        parts.append(_LEN.pack(len(blob)))
        parts.append(blob)
    return b"".join(parts)


def unpack_boot_image(data: bytes) -> BootImage:
    fields = []
    offset = 0
    for name in ("kernel blob", "attestation digest", "attestation blob",
                 "public key", "signature"):
        if offset + _LEN.size > len(data):
            raise BootRefused(BootFailure.MALFORMED_IMAGE,
                              f"truncated before {name} length")
        (length,) = _LEN.unpack_from(data, offset)
        offset += _LEN.size
        if offset + length > len(data):
            raise BootRefused(BootFailure.MALFORMED_IMAGE, f"truncated {name}")
        fields.append(data[offset:offset + length])
        offset += length
    if offset != len(data):
        raise BootRefused(BootFailure.MALFORMED_IMAGE,
                          f"{len(data) - offset} trailing bytes")
    image = BootImage(*fields)
    if len(image.attest_digest) != DIGEST_SIZE:
        raise BootRefused(BootFailure.MALFORMED_IMAGE, "digest field size")
    if len(image.public_key) != PUBKEY_SIZE:
        raise BootRefused(BootFailure.MALFORMED_IMAGE, "public key field size")
    if len(image.signature) != SIGNATURE_SIZE:
        raise BootRefused(BootFailure.MALFORMED_IMAGE, "signature field size")
    return image


def rom_boot(rom: FusedRom, data: bytes) -> BootImage:
    """First boot stage: parse, check the embedded key, check the signature."""
    image = unpack_boot_image(data)
    if sha256(image.public_key) != rom.pk_digest:
        raise BootRefused(BootFailure.PK_MISMATCH,
                          "embedded public key does not match fused digest")
    if not rom._skip_signature_check:
        if not verify(image.public_key, image.signed_region, image.signature):
            raise BootRefused(BootFailure.BAD_SIGNATURE,
                              "signature over kernel and attestation digest")
    return image


def kernel_verify_attest(image: BootImage) -> bool:
    """Second stage, run by the verified kernel before handover."""
    return sha256(image.attest_blob) == image.attest_digest


def full_boot(rom: FusedRom, data: bytes,
              total_user_frames: int = 64) -> platform.Kernel:
    """Run the whole chain and return a live platform, or refuse."""
    image = rom_boot(rom, data)
    if not kernel_verify_attest(image):
        raise BootRefused(BootFailure.ATTEST_HASH_MISMATCH,
                          "attestation blob does not match signed digest")
    return platform.kernel_boot(image.kernel_blob, image.attest_blob,
                                total_user_frames)


DEFAULT_KERNEL_BLOB = b"\x7fKRN" + bytes(60)


def build_platform(attest_blob: bytes, total_user_frames: int = 64,
                   kernel_blob: bytes = DEFAULT_KERNEL_BLOB,
                   keypair: SignatureKeyPair | None = None) -> platform.Kernel:
    """Convenience for harnesses and tests: pack, sign, and boot honestly."""
    keypair = keypair or SignatureKeyPair.generate()
    rom = FusedRom.for_keypair(keypair)
    return full_boot(rom, pack_boot_image(kernel_blob, attest_blob, keypair),
                     total_user_frames)
