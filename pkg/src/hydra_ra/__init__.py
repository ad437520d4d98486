"""Simulated hybrid remote-attestation stack.

A desk-scale model of an attestation device: a capability microkernel with
isolated address spaces, a measured secure-boot chain, a keyed-MAC
attestation service, and the verifier protocol that talks to it, plus
benchmark and adversary-simulation harnesses around the whole thing.
"""
from . import advsim, attest, bench, boot, crypto, manifest, modelcheck
from . import platform, proto

__version__ = "0.1.0"

__all__ = [
    "advsim",
    "attest",
    "bench",
    "boot",
    "crypto",
    "manifest",
    "modelcheck",
    "platform",
    "proto",
    "__version__",
]
