"""Adversary scenarios run end-to-end against a freshly booted device.

Each scenario exercises one protection and passes only if the protection
holds. For harness validation every scenario also has a disable switch
naming the protection it leans on; running the scenario with that switch
set must make it fail, proving the scenario actually measures something.

Scenarios are deterministic for a given seed: device keys, images, request
timestamps and adversary choices all derive from the seed or fixed
streams, and transcripts never include wall-clock values.

Physical attacks (fault injection, bus probing) are out of scope by
construction; the adversary here owns the network and any user process.
"""
from __future__ import annotations

import random
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import boot
from .attest import (AttestReport, AttestRequest, AttestService,
                     ErrorIndication, TimestampStore, make_request,
                     verify_report)
from .crypto import MacAlgorithm, SignatureKeyPair
from .manifest import demo_manifest, provision_device
from .platform import (AccessDenied, Capability, GrantWithoutCapability,
                       KernelError, NoGrantRight, OutOfFrames,
                       PriorityEscalation, Right)

FORGE_ATTEMPTS = 100

# scenario name -> the protection its disable switch turns off
SCENARIO_DISABLES = {
    "forge_request": "request_auth",
    "replay_request": "freshness",
    "malware_infection": "cached_image",
    "key_steal": "capability_checks",
    "priority_attack": "priority_raise",
    "evil_boot": "signature_check",
    "tcb_tamper": "capability_checks",
}

SCENARIO_NAMES = tuple(SCENARIO_DISABLES)


class ScenarioFailure(Exception):
    """A protection the scenario relies on did not hold."""


@dataclass
class ScenarioResult:
    name: str
    passed: bool
    transcript: list[str] = field(default_factory=list)


class ScenarioContext:
    def __init__(self, seed: int, disable: Optional[str], tmpdir: str):
        self.rng = random.Random(seed)
        self.disable = disable
        self.tmpdir = tmpdir
        self.transcript: list[str] = []
        self._next_ts = 1

    def log(self, message: str) -> None:
        self.transcript.append(message)

    def next_ts(self) -> int:
        ts = self._next_ts
        self._next_ts += 1
        return ts

    def require(self, condition: bool, description: str) -> None:
        if not condition:
            raise ScenarioFailure(description)
        self.log(f"ok: {description}")


def _provision(ctx: ScenarioContext,
               algorithm: MacAlgorithm = MacAlgorithm.SPECK_64_128_CBC):
    """Honest device with three user processes and a frozen local clock."""
    manifest = demo_manifest(algorithm)
    kernel, service, pids = provision_device(
        manifest, f"{ctx.tmpdir}/tsave.bin", counter=lambda: 0)
    if ctx.disable == "request_auth":
        service._skip_request_auth = True
    elif ctx.disable == "freshness":
        service._skip_freshness = True
    elif ctx.disable == "cached_image":
        service._attest_cached_image = True
    elif ctx.disable == "capability_checks":
        kernel._skip_capability_checks = True
    elif ctx.disable == "priority_raise":
        kernel._allow_priority_raise = True
    return manifest, kernel, service, pids


def _appraise(service: AttestService, manifest, pid: int, name: str,
              ctx: ScenarioContext) -> str:
    """Local verifier: attest the full image of one process and judge it."""
    image = next(p.image for p in manifest.processes if p.name == name)
    suite = manifest.suite()
    request = make_request(suite, ctx.next_ts(), pid, 0, len(image) - 1)
    answer = service.attest(request)
    if answer is None:
        return "NO_RESPONSE"
    if isinstance(answer, ErrorIndication):
        return f"ERROR({answer.code.name})"
    return "TRUSTED" if verify_report(suite, answer, image) else "MODIFIED"


# -- scenarios ---------------------------------------------------------------

def scenario_forge_request(ctx: ScenarioContext) -> None:
    """Network adversary without K_Auth guesses request tags."""
    manifest, kernel, service, pids = _provision(ctx)
    target = pids["app0"]
    responses = 0
    for _ in range(FORGE_ATTEMPTS):
        request = AttestRequest(ctx.next_ts(), target, 0, 100,
                                ctx.rng.randbytes(manifest.suite().tag_length))
        if service.attest(request) is not None:
            responses += 1
    ctx.require(responses == 0,
                f"{FORGE_ATTEMPTS} forged requests all ignored")


def scenario_replay_request(ctx: ScenarioContext) -> None:
    """Adversary captures a valid request and plays it again, then tries
    an older-timestamp variant (reordering)."""
    manifest, kernel, service, pids = _provision(ctx)
    suite = manifest.suite()
    target = pids["app0"]
    ctx.next_ts()  # leave room below the captured timestamp
    captured = make_request(suite, ctx.next_ts(), target, 0, 500)
    first = service.attest(captured)
    ctx.require(isinstance(first, AttestReport), "original request answered")
    ctx.require(service.attest(captured) is None, "replay ignored")
    older = make_request(suite, captured.timestamp - 1, target, 0, 500)
    ctx.require(service.attest(older) is None, "reordered request ignored")
    fresh = make_request(suite, ctx.next_ts(), target, 0, 500)
    ctx.require(isinstance(service.attest(fresh), AttestReport),
                "service still answers fresh requests")


def scenario_malware_infection(ctx: ScenarioContext) -> None:
    """Remote adversary rewrites part of a process it controls; the next
    report must reflect the infected memory."""
    manifest, kernel, service, pids = _provision(ctx)
    target = pids["app1"]
    ctx.require(_appraise(service, manifest, target, "app1", ctx) == "TRUSTED",
                "clean device appraises TRUSTED")
    image = next(p.image for p in manifest.processes if p.name == "app1")
    offset = ctx.rng.randrange(len(image))
    payload = bytes([image[offset] ^ (1 + ctx.rng.randrange(255))])
    kernel.vspace_write(target, offset, payload)
    ctx.log(f"infected pid {target} at offset {offset}")
    ctx.require(_appraise(service, manifest, target, "app1", ctx) == "MODIFIED",
                "infected device appraises MODIFIED")
    # The report must authenticate what is actually in memory now.
    infected = bytearray(image)
    infected[offset:offset + 1] = payload
    suite = manifest.suite()
    request = make_request(suite, ctx.next_ts(), target, 0, len(image) - 1)
    report = service.attest(request)
    ctx.require(isinstance(report, AttestReport)
                and verify_report(suite, report, bytes(infected)),
                "report matches recomputation over infected image")


def scenario_key_steal(ctx: ScenarioContext, misgrant_fixture: bool = False
                       ) -> None:
    """A compromised user process throws every API call it has at the
    attestation key frames. Everything must bounce and the audit must
    stay clean.

    With misgrant_fixture the harness deliberately plants a key-frame
    capability in the compromised process first; the scenario must then
    fail, which is how the tests prove it can detect a real leak.
    """
    manifest, kernel, service, pids = _provision(ctx)
    comp = pids["app2"]
    key_frames = sorted(kernel.attest_frame_ids)
    if misgrant_fixture:
        kernel.processes[comp].cspace.insert(
            kernel, Capability(key_frames[0], frozenset({Right.READ})))
        ctx.log("fixture: planted a read capability to a key frame")

    denied = 0
    leaked = []
    for frame in key_frames:
        try:
            kernel.read_memory(comp, frame, 0, 16)
            leaked.append(f"read_memory({frame})")
        except AccessDenied:
            denied += 1
        try:
            kernel.write_memory(comp, frame, 0, b"\x00" * 16)
            leaked.append(f"write_memory({frame})")
        except AccessDenied:
            denied += 1
    try:
        with kernel.map_foreign_frames(comp, kernel.attest_pid, 0, 15) as view:
            view.read()
        leaked.append("map_foreign_frames(attest)")
    except AccessDenied:
        denied += 1
    forged = Capability(key_frames[0], frozenset({Right.READ}))
    try:
        kernel.spawn_process(comp, b"\x01", 10, granted=[forged])
        leaked.append("spawn with forged key-frame capability")
    except (GrantWithoutCapability, OutOfFrames):
        denied += 1
    fault_ep = kernel.list_capabilities(comp)[1]
    try:
        kernel.transfer_capability(comp, fault_ep.object_ref, forged)
        leaked.append("transfer of forged key-frame capability")
    except (NoGrantRight, GrantWithoutCapability, KernelError):
        denied += 1
    try:
        kernel.vspace_read(comp, 1 << 30, 16)
        leaked.append("stray vspace read")
    except AccessDenied:
        denied += 1

    ctx.log(f"{denied} attempts denied")
    ctx.require(not leaked, f"no access path to key frames (leaks: {leaked})")
    report = kernel.audit_configuration()
    ctx.require(report.clean,
                f"audit clean after the attack ({len(report.violations)} findings)")
    stray = 0
    for ref in kernel.all_frame_ids():
        if ref in kernel.attest_frame_ids:
            continue
        contents = kernel.inspect_frame(ref)
        if (service.suite.master_key in contents
                or service.suite.auth_key in contents):
            stray += 1
    ctx.require(stray == 0,
                "key bytes absent from all non-attestation frames")


def scenario_priority_attack(ctx: ScenarioContext) -> None:
    """Compromised process tries to climb above the attestation service."""
    manifest, kernel, service, pids = _provision(ctx)
    comp = pids["app0"]
    comp_priority = kernel.processes[comp].tcb.priority

    try:
        kernel.set_priority(comp, kernel.attest_tcb_ref, 0)
        raise ScenarioFailure("adversary adjusted the attestation TCB")
    except AccessDenied:
        ctx.log("ok: no capability to the attestation TCB")

    # Even owning its own TCB capability must not allow a raise. The
    # service hands the capability over through a grant endpoint.
    own_tcb = kernel.processes[comp].tcb.object_ref
    ep = kernel.create_endpoint(kernel.attest_pid, comp, grant=True)
    tcb_cap = kernel.processes[kernel.attest_pid].cspace.find(own_tcb)
    kernel.transfer_capability(kernel.attest_pid, ep, tcb_cap)
    ctx.log("adversary was handed its own TCB capability")
    try:
        kernel.set_priority(comp, own_tcb, 255)
        raise ScenarioFailure("priority raised to 255")
    except PriorityEscalation:
        ctx.require(True, "raise to 255 refused")
    kernel.set_priority(comp, own_tcb, comp_priority - 50)
    ctx.log("lowering own priority is allowed")
    try:
        kernel.set_priority(comp, own_tcb, comp_priority)
        raise ScenarioFailure("priority raised back after lowering")
    except PriorityEscalation:
        ctx.require(True, "raise back to the old value refused")
    ctx.require(kernel.processes[kernel.attest_pid].tcb.priority == 255,
                "attestation service still at top priority")


def scenario_evil_boot(ctx: ScenarioContext) -> None:
    """Attacker ships modified kernels, modified attestation blobs, and
    re-signed images; the ROM must refuse them all."""
    keypair = SignatureKeyPair.generate()
    rom = boot.FusedRom.for_keypair(keypair)
    if ctx.disable == "signature_check":
        rom._skip_signature_check = True
    kernel_blob = b"\x7fKRN" + ctx.rng.randbytes(600)
    attest_blob = _provision_blob(ctx.rng)
    image = boot.pack_boot_image(kernel_blob, attest_blob, keypair)

    booted = boot.full_boot(rom, image, total_user_frames=8)
    ctx.require(booted.attest_pid == 1, "honest image boots")

    refusals = 0
    accepted = []
    for label, evil in (
            ("kernel byte flipped", _flip(image, 8, ctx.rng)),
            ("attestation blob byte flipped",
             _flip_attest(kernel_blob, attest_blob, keypair, ctx.rng)),
            ("image re-signed under attacker key",
             boot.pack_boot_image(kernel_blob, attest_blob,
                                  SignatureKeyPair.generate()))):
        try:
            boot.full_boot(rom, evil, total_user_frames=8)
            accepted.append(label)
        except boot.BootRefused as refused:
            refusals += 1
            ctx.log(f"refused ({refused.reason.value}): {label}")
    ctx.require(not accepted, f"all tampered images refused (booted: {accepted})")
    ctx.require(refusals == 3, "every attack path ends in refusal")


def scenario_tcb_tamper(ctx: ScenarioContext) -> None:
    """Compromised process goes after the attestation TCB object itself."""
    manifest, kernel, service, pids = _provision(ctx)
    comp = pids["app1"]
    tcb_ref = kernel.attest_tcb_ref

    tampered = []
    try:
        kernel.set_priority(comp, tcb_ref, 254)
        tampered.append("set_priority on attestation TCB")
    except AccessDenied:
        ctx.log("ok: set_priority on the attestation TCB denied")
    forged = Capability(tcb_ref, frozenset({Right.READ, Right.WRITE}))
    try:
        kernel.spawn_process(comp, b"\x01", 10, granted=[forged])
        tampered.append("spawn granting forged TCB capability")
    except (GrantWithoutCapability, OutOfFrames):
        ctx.log("ok: forged TCB capability not grantable via spawn")
    ep = kernel.create_endpoint(comp, comp, grant=True)
    try:
        kernel.transfer_capability(comp, ep, forged)
        tampered.append("transfer of forged TCB capability")
    except GrantWithoutCapability:
        ctx.log("ok: forged TCB capability not transferable")
    ctx.require(not tampered, f"TCB untouchable (tampered: {tampered})")
    ctx.require(kernel.processes[kernel.attest_pid].tcb.priority == 255,
                "attestation TCB priority unchanged")
    report = kernel.audit_configuration()
    ctx.require(not any(v.config_item == "C2" for v in report.violations),
                "no C2 finding in the audit")


def _provision_blob(rng: random.Random) -> bytes:
    from .attest import pack_attest_image
    key = bytes(rng.randrange(256) for _ in range(16))
    return pack_attest_image(MacAlgorithm.SPECK_64_128_CBC, key,
                             code=rng.randbytes(512))


def _flip(image: bytes, offset: int, rng: random.Random) -> bytes:
    mutated = bytearray(image)
    mutated[offset] ^= 1 + rng.randrange(255)
    return bytes(mutated)


def _flip_attest(kernel_blob: bytes, attest_blob: bytes,
                 keypair: SignatureKeyPair, rng: random.Random) -> bytes:
    # Tamper only with the attestation section, after signing: the kernel
    # signature still verifies, the attestation hash must not.
    evil = _flip(attest_blob, rng.randrange(len(attest_blob)), rng)
    digest_ok = boot.sha256(attest_blob)
    signature = boot.sign(keypair.private_key, kernel_blob + digest_ok)
    parts = []
    for blob in (kernel_blob, digest_ok, evil, keypair.public_key, signature):
        parts.append(len(blob).to_bytes(4, "big"))
        parts.append(blob)
    return b"".join(parts)


_SCENARIOS: dict[str, Callable[..., None]] = {
    "forge_request": scenario_forge_request,
    "replay_request": scenario_replay_request,
    "malware_infection": scenario_malware_infection,
    "key_steal": scenario_key_steal,
    "priority_attack": scenario_priority_attack,
    "evil_boot": scenario_evil_boot,
    "tcb_tamper": scenario_tcb_tamper,
}


def run_scenario(name: str, seed: int = 0, disable: Optional[str] = None,
                 **fixture_kwargs) -> ScenarioResult:
    """Run one scenario against a fresh device.

    `disable` switches off the named protection first (harness
    validation); the scenario is then expected to fail.
    """
    if name not in _SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}, "
                         f"expected one of {sorted(_SCENARIOS)}")
    with tempfile.TemporaryDirectory() as tmpdir:
        ctx = ScenarioContext(seed, disable, tmpdir)
        ctx.log(f"scenario {name} seed {seed}"
                + (f" disable={disable}" if disable else ""))
        try:
            _SCENARIOS[name](ctx, **fixture_kwargs)
            ctx.log("PASS")
            return ScenarioResult(name, True, ctx.transcript)
        except ScenarioFailure as failure:
            ctx.log(f"FAIL: {failure}")
            return ScenarioResult(name, False, ctx.transcript)


def run_all(seed: int = 0) -> list[ScenarioResult]:
    return [run_scenario(name, seed) for name in SCENARIO_NAMES]
