"""Exhaustive authority-confinement check over the real kernel.

Explores every sequence of public kernel API calls that non-attestation
processes can issue, up to a bounded length, on a small device (three
processes, eight frames). At every reachable state the three exclusivity
rules (C1 binary+key frames, C2 TCB, C3 VSpace) must audit clean, the
attestation frames must equal their boot snapshot, and direct-access
probes must all be denied.

Operations that cannot change capability state split from those that can.
Probes (memory reads/writes, foreign mapping, priority changes on the
attestation TCB, spawning without frame capabilities) are executed at
every state and asserted to raise; if one ever succeeds that is itself a
violation. Branching operations (endpoint creation, capability transfer)
are applied and undone in place, so each distinct state is materialized
once. States are deduplicated by a canonical structural signature that
renames endpoint references and ignores frame contents and logs.
"""
from __future__ import annotations

import copy
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import boot
from .attest import pack_attest_image
from .crypto import MacAlgorithm
from .manifest import stream_bytes
from .platform import (AccessDenied, Capability, GrantWithoutCapability,
                       Kernel, KernelError, NoGrantRight, ObjectKind,
                       OutOfFrames, PriorityEscalation, Right)

DENIALS = (AccessDenied, GrantWithoutCapability, NoGrantRight,
           PriorityEscalation, OutOfFrames, KernelError)

Op = tuple  # ("ep", caller, receiver, grant) | ("xfer", caller, ep_ref, cap_key)


@dataclass
class ModelCheckResult:
    states: int = 0
    transitions: int = 0
    probes: int = 0
    max_depth_reached: int = 0
    elapsed_s: float = 0.0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def build_root(total_frames: int = 8, user_count: int = 2) -> Kernel:
    """Minimal device: attestation process plus `user_count` one-page users."""
    blob = pack_attest_image(MacAlgorithm.SPECK_64_128_CBC,
                             stream_bytes("mc-key", 16))
    kernel = boot.build_platform(blob, total_frames)
    for i in range(user_count):
        kernel.spawn_process(kernel.attest_pid,
                             stream_bytes(f"mc-user{i}", 4096), 100,
                             granted=[], name=f"user{i}")
    return kernel


def _adversaries(kernel: Kernel) -> list[int]:
    return [pid for pid in sorted(kernel.processes) if pid != kernel.attest_pid]


def _cap_key(cap: Capability) -> tuple:
    return (cap.object_ref, tuple(sorted(r.value for r in cap.rights)), cap.badge)


def _cap_from_key(key: tuple) -> Capability:
    ref, rights, badge = key
    return Capability(ref, frozenset(Right(r) for r in rights), badge)


def canonical_signature(kernel: Kernel) -> tuple:
    """Structural state only: who holds what, who maps what, priorities.

    Two reductions keep the search canonical and finite without losing
    authority information. Endpoints carry no stable name: each is
    represented by its profile (receiver plus the full set of holders and
    their rights), so creation order is invisible and interchangeable
    endpoints coincide. Capability holdings are sets, not multisets:
    duplicate copies of an identical capability grant nothing beyond the
    first, so states differing only in copy counts are merged.
    """
    ep_holdings: dict[int, list] = {}
    for pid in sorted(kernel.processes):
        for cap in kernel.processes[pid].cspace.capabilities():
            if kernel.object_kind(cap.object_ref) == ObjectKind.ENDPOINT:
                rights = tuple(sorted(r.value for r in cap.rights))
                ep_holdings.setdefault(cap.object_ref, []).append(
                    (pid, rights, cap.badge))
    profiles = {
        ref: (kernel._objects[ref].receiver_pid,
              tuple(sorted(set(holders))))
        for ref, holders in ep_holdings.items()
    }

    parts = []
    for pid in sorted(kernel.processes):
        proc = kernel.processes[pid]
        caps = set()
        for cap in proc.cspace.capabilities():
            rights = tuple(sorted(r.value for r in cap.rights))
            kind = kernel.object_kind(cap.object_ref)
            if kind == ObjectKind.ENDPOINT:
                caps.add(("E",) + profiles[cap.object_ref] + (rights, cap.badge))
            else:
                caps.add((kind.value[0].upper(), cap.object_ref,
                          rights, cap.badge))
        vmap = tuple(sorted(
            (vpn, entry.frame_id, tuple(sorted(r.value for r in entry.rights)))
            for vpn, entry in proc.vspace.entries()))
        parts.append((pid, proc.tcb.priority, tuple(sorted(caps)), vmap))
    return tuple(parts)


# -- state checks: every reachable state must satisfy these ------------------

def check_state(kernel: Kernel, snapshot: bytes, result: ModelCheckResult,
                label: str) -> None:
    audit = kernel.audit_configuration()
    for violation in audit.violations:
        result.violations.append(
            f"{label}: {violation.config_item} pid {violation.pid}: "
            f"{violation.detail}")
    if kernel.attest_image_bytes() != snapshot:
        result.violations.append(f"{label}: attestation frames modified")
    for pid in _adversaries(kernel):
        for frame in kernel.all_frame_ids():
            _probe(result, label, f"read_memory({pid},{frame})",
                   lambda: kernel.read_memory(pid, frame, 0, 1))
            _probe(result, label, f"write_memory({pid},{frame})",
                   lambda: kernel.write_memory(pid, frame, 0, b"\x00"))
        for target in sorted(kernel.processes):
            _probe(result, label, f"map_foreign({pid},{target})",
                   lambda: kernel.map_foreign_frames(pid, target, 0, 0))
        _probe(result, label, f"set_priority({pid},attest_tcb)",
               lambda: kernel.set_priority(pid, kernel.attest_tcb_ref, 0))
        _probe(result, label, f"spawn({pid})",
               lambda: kernel.spawn_process(pid, b"\x01", 1, granted=[]))


def _probe(result: ModelCheckResult, label: str, name: str, call) -> None:
    result.probes += 1
    try:
        call()
    except DENIALS:
        return
    result.violations.append(f"{label}: probe unexpectedly succeeded: {name}")


# -- branching operations with undo ------------------------------------------

def branch_ops(kernel: Kernel) -> Iterator[Op]:
    pids = sorted(kernel.processes)
    for caller in _adversaries(kernel):
        for receiver in pids:
            for grant in (False, True):
                yield ("ep", caller, receiver, grant)
        cspace = kernel.processes[caller].cspace
        grant_eps = [cap.object_ref for cap in cspace.capabilities()
                     if Right.GRANT in cap.rights
                     and kernel.object_kind(cap.object_ref) == ObjectKind.ENDPOINT]
        if grant_eps:
            held = [_cap_key(cap) for cap in cspace.capabilities()]
            for ep_ref in grant_eps:
                for key in held:
                    yield ("xfer", caller, ep_ref, key)


def _remove_one(cspace, cap: Capability) -> None:
    if not cspace.remove(cap):
        raise RuntimeError(f"undo failed: {cap} not found")


def apply_op(kernel: Kernel, op: Op) -> tuple:
    """Apply a branching op; return what undo_op needs."""
    before_ref = kernel._next_ref
    if op[0] == "ep":
        _, caller, receiver, grant = op
        ep_ref = kernel.create_endpoint(caller, receiver, grant)
        rights = {Right.WRITE, Right.GRANT} if grant else {Right.WRITE}
        return ("ep", caller, ep_ref, Capability(ep_ref, frozenset(rights)),
                before_ref)
    _, caller, ep_ref, key = op
    cap = _cap_from_key(key)
    receiver = kernel._objects[ep_ref].receiver_pid
    kernel.transfer_capability(caller, ep_ref, cap)
    if kernel._next_ref != before_ref:
        raise RuntimeError("transfer allocated an object, undo impossible")
    return ("xfer", receiver, cap)


def undo_op(kernel: Kernel, token: tuple) -> None:
    if token[0] == "ep":
        _, caller, ep_ref, cap, before_ref = token
        _remove_one(kernel.processes[caller].cspace, cap)
        del kernel._objects[ep_ref]
        kernel._next_ref = before_ref
    else:
        _, receiver, cap = token
        _remove_one(kernel.processes[receiver].cspace, cap)


def _replay(root: Kernel, path: tuple[Op, ...]) -> Kernel:
    kernel = copy.deepcopy(root)
    for op in path:
        apply_op(kernel, op)
    return kernel


def check_authority_confinement(max_depth: int = 6, total_frames: int = 8,
                                user_count: int = 2,
                                stop_on_violation: bool = True,
                                root: Kernel | None = None,
                                ) -> ModelCheckResult:
    """Breadth-first search over adversary-reachable capability states."""
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    t0 = time.perf_counter()
    result = ModelCheckResult()
    if root is None:
        root = build_root(total_frames, user_count)
    snapshot = root.attest_image_bytes()

    seen = {canonical_signature(root)}
    frontier: deque[tuple[Op, ...]] = deque([()])
    while frontier:
        path = frontier.popleft()
        kernel = _replay(root, path)
        result.states += 1
        result.max_depth_reached = max(result.max_depth_reached, len(path))
        check_state(kernel, snapshot, result, f"depth {len(path)}")
        if result.violations and stop_on_violation:
            break
        if len(path) == max_depth:
            continue
        for op in list(branch_ops(kernel)):
            token = apply_op(kernel, op)
            result.transitions += 1
            signature = canonical_signature(kernel)
            if signature not in seen:
                seen.add(signature)
                frontier.append(path + (op,))
            undo_op(kernel, token)
    result.elapsed_s = time.perf_counter() - t0
    return result
