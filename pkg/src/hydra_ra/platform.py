"""Simulated prover platform: kernel objects, capabilities, scheduler.

A single trusted in-process kernel model. Every operation is a plain method
call that performs the same access-control decision the real microkernel
would make: callers are process ids, authority is whatever their capability
space holds, and denied operations raise (and log) recoverable errors -- the
kernel itself never crashes.

Processes touch memory on two paths. `read_memory`/`write_memory` is the
kernel path, checked against frame capabilities in the caller's CSpace.
`vspace_read`/`vspace_write` is the MMU path, checked against the caller's
own page mappings; this is how a process reaches its own image, and how a
compromised process corrupts itself.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional

PAGE_SIZE = 4096
MAX_PRIORITY = 255
CNODE_SLOTS = 64

# Virtual page number where borrowed (foreign-view) mappings start; process
# images sit at vpn 0 and never grow anywhere near this.
VIEW_REGION_BASE = 1 << 20


class KernelError(Exception):
    """Base for every access-control or argument failure in the kernel."""


class AccessDenied(KernelError):
    pass


class PriorityEscalation(KernelError):
    pass


class GrantWithoutCapability(KernelError):
    pass


class NoGrantRight(KernelError):
    pass


class RangeOutOfBounds(KernelError):
    pass


class UnknownProcess(KernelError):
    pass


class OutOfFrames(KernelError):
    pass


class Right(Enum):
    READ = "read"
    WRITE = "write"
    GRANT = "grant"


@dataclass(frozen=True)
class Capability:
    """Unforgeable token: kernel-object reference plus a set of rights.

    Only the kernel mints capabilities; user-level code refers to its own
    capabilities through CSpace slots and can hand copies to kernel calls,
    which honor them only if an equal capability is actually stored in the
    caller's CSpace.
    """
    object_ref: int
    rights: frozenset[Right]
    badge: int = 0


class ObjectKind(Enum):
    FRAME = "frame"
    TCB = "tcb"
    ENDPOINT = "endpoint"
    CNODE = "cnode"


@dataclass
class Frame:
    frame_id: int
    contents: bytearray

    def __post_init__(self):
        if len(self.contents) != PAGE_SIZE:
            raise ValueError("frame contents must be exactly one page")


@dataclass
class Tcb:
    object_ref: int
    process_id: int
    priority: int
    program_state: bytes = b""
    fault_endpoint_slot: int = 1


@dataclass
class Endpoint:
    object_ref: int
    receiver_pid: int


class CNode:
    """Table of slots; a slot holds a capability, a child CNode, or nothing."""

    def __init__(self, object_ref: int, size: int = CNODE_SLOTS):
        self.object_ref = object_ref
        self.slots: list[Capability | CNode | None] = [None] * size


class CSpace:
    """Capability space rooted in a CNode; lives entirely inside the kernel.

    A by-object index shadows the slot tree so rights checks stay O(1) the
    way slot-addressed lookups are on real hardware; the tree remains the
    source of truth for slot layout.
    """

    def __init__(self, root: CNode):
        self.root = root
        self._by_ref: dict[int, list[Capability]] = {}

    def _iter_slots(self, node: CNode) -> Iterator[tuple[CNode, int]]:
        for i, slot in enumerate(node.slots):
            if isinstance(slot, CNode):
                yield from self._iter_slots(slot)
            else:
                yield node, i

    def capabilities(self) -> list[Capability]:
        return [node.slots[i] for node, i in self._iter_slots(self.root)
                if isinstance(node.slots[i], Capability)]

    def holds(self, cap: Capability) -> bool:
        return any(c == cap for c in self._by_ref.get(cap.object_ref, ()))

    def dominates(self, cap: Capability) -> bool:
        """True if some held capability on the same object carries at least
        the requested rights; copying may attenuate, never amplify."""
        return any(cap.rights <= c.rights
                   for c in self._by_ref.get(cap.object_ref, ()))

    def find(self, object_ref: int, right: Right | None = None) -> Optional[Capability]:
        for cap in self._by_ref.get(object_ref, ()):
            if right is None or right in cap.rights:
                return cap
        return None

    def insert(self, kernel: "Kernel", cap: Capability) -> None:
        self._by_ref.setdefault(cap.object_ref, []).append(cap)
        node = self.root
        while True:
            for i, slot in enumerate(node.slots):
                if slot is None:
                    node.slots[i] = cap
                    return
            # Root full: chain a child CNode into the last slot.
            last = node.slots[-1]
            if isinstance(last, CNode):
                node = last
            else:
                child = kernel._new_cnode()
                child.slots[0] = last
                node.slots[-1] = child
                node = child

    def remove(self, cap: Capability) -> bool:
        """Clear the first slot holding an equal capability."""
        for node, i in self._iter_slots(self.root):
            if node.slots[i] == cap:
                node.slots[i] = None
                bucket = self._by_ref[cap.object_ref]
                bucket.remove(cap)
                if not bucket:
                    del self._by_ref[cap.object_ref]
                return True
        return False


@dataclass(frozen=True)
class PageTableEntry:
    frame_id: int
    rights: frozenset[Right]


class VSpace:
    """Two-level address space: page directory of page tables of entries."""

    PT_BITS = 8
    PT_SPAN = 1 << PT_BITS

    def __init__(self):
        self.page_directory: dict[int, dict[int, PageTableEntry]] = {}
        self.borrowed_vpns: set[int] = set()
        self._next_view_vpn = VIEW_REGION_BASE

    def map_page(self, vpn: int, frame_id: int, rights: frozenset[Right],
                 borrowed: bool = False) -> None:
        table = self.page_directory.setdefault(vpn >> self.PT_BITS, {})
        index = vpn & (self.PT_SPAN - 1)
        if index in table:
            raise KernelError(f"vpn {vpn} already mapped")
        table[index] = PageTableEntry(frame_id, rights)
        if borrowed:
            self.borrowed_vpns.add(vpn)

    def unmap_page(self, vpn: int) -> None:
        table = self.page_directory.get(vpn >> self.PT_BITS)
        index = vpn & (self.PT_SPAN - 1)
        if table is None or index not in table:
            raise KernelError(f"vpn {vpn} not mapped")
        del table[index]
        if not table:
            del self.page_directory[vpn >> self.PT_BITS]
        self.borrowed_vpns.discard(vpn)

    def lookup(self, vpn: int) -> Optional[PageTableEntry]:
        table = self.page_directory.get(vpn >> self.PT_BITS)
        if table is None:
            return None
        return table.get(vpn & (self.PT_SPAN - 1))

    def entries(self) -> Iterator[tuple[int, PageTableEntry]]:
        for pd_index, table in self.page_directory.items():
            for pt_index, entry in table.items():
                yield (pd_index << self.PT_BITS) | pt_index, entry

    def mapped_frames(self, include_borrowed: bool = True) -> set[int]:
        return {entry.frame_id for vpn, entry in self.entries()
                if include_borrowed or vpn not in self.borrowed_vpns}

    def allocate_view_vpns(self, count: int) -> list[int]:
        vpns = list(range(self._next_view_vpn, self._next_view_vpn + count))
        self._next_view_vpn += count
        return vpns


@dataclass
class ProcessRecord:
    pid: int
    name: str
    tcb: Tcb
    cspace: CSpace
    vspace: VSpace
    image_start: int
    image_len: int
    image_frames: list[int]


@dataclass(frozen=True)
class DenialRecord:
    pid: int
    operation: str
    object_ref: int
    detail: str


@dataclass(frozen=True)
class AuditViolation:
    config_item: str  # "C1" | "C2" | "C3"
    pid: int
    object_ref: int
    detail: str


@dataclass
class AuditReport:
    violations: list[AuditViolation]

    @property
    def clean(self) -> bool:
        return not self.violations


class ForeignView:
    """Read-only window onto a byte range of another process's image.

    Closing the view unmaps the borrowed pages, restoring the owner's
    address space to its prior state.
    """

    def __init__(self, kernel: "Kernel", owner_pid: int, target_pid: int,
                 start: int, end: int, vpns: list[int], frame_ids: list[int]):
        self._kernel = kernel
        self.owner_pid = owner_pid
        self.target_pid = target_pid
        self.start = start
        self.end = end
        self._vpns = vpns
        self._frame_ids = frame_ids
        self._closed = False

    def __len__(self) -> int:
        return self.end - self.start + 1

    def read(self) -> bytes:
        if self._closed:
            raise KernelError("view already closed")
        parts = [bytes(self._kernel._frame(f).contents) for f in self._frame_ids]
        blob = b"".join(parts)
        lo = self.start % PAGE_SIZE
        return blob[lo:lo + len(self)]

    def close(self) -> None:
        if self._closed:
            return
        owner = self._kernel._process(self.owner_pid)
        for vpn in self._vpns:
            owner.vspace.unmap_page(vpn)
        self._closed = True

    def __enter__(self) -> "ForeignView":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class Kernel:
    """The platform state machine. All operations serialize through it."""

    def __init__(self):
        self._objects: dict[int, object] = {}
        self._next_ref = 1
        self._next_pid = 1
        self.processes: dict[int, ProcessRecord] = {}
        self.denial_log: list[DenialRecord] = []
        self.schedule_log: deque[int] = deque(maxlen=100_000)
        self._run_queues: dict[int, deque[int]] = {}
        self._blocked: set[int] = set()
        self.attest_pid: int = 0
        self.attest_frame_ids: frozenset[int] = frozenset()
        self.attest_tcb_ref: int = 0
        self.boot_snapshot: bytes = b""
        self.kernel_image_digest: bytes = b""
        # Test-only sabotage switches for harness validation; never set in
        # production paths.
        self._skip_capability_checks = False
        self._allow_priority_raise = False

    # -- object table -------------------------------------------------------

    def _alloc_ref(self) -> int:
        ref = self._next_ref
        self._next_ref += 1
        return ref

    def _new_cnode(self) -> CNode:
        node = CNode(self._alloc_ref())
        self._objects[node.object_ref] = node
        return node

    def _new_frame(self) -> Frame:
        frame = Frame(self._alloc_ref(), bytearray(PAGE_SIZE))
        self._objects[frame.frame_id] = frame
        return frame

    def object_kind(self, ref: int) -> Optional[ObjectKind]:
        obj = self._objects.get(ref)
        if isinstance(obj, Frame):
            return ObjectKind.FRAME
        if isinstance(obj, Tcb):
            return ObjectKind.TCB
        if isinstance(obj, Endpoint):
            return ObjectKind.ENDPOINT
        if isinstance(obj, CNode):
            return ObjectKind.CNODE
        return None

    def _frame(self, ref: int) -> Frame:
        obj = self._objects.get(ref)
        if not isinstance(obj, Frame):
            raise KernelError(f"object {ref} is not a frame")
        return obj

    def _process(self, pid: int) -> ProcessRecord:
        try:
            return self.processes[pid]
        except KeyError:
            raise UnknownProcess(f"no process {pid}") from None

    def all_frame_ids(self) -> list[int]:
        return sorted(ref for ref, obj in self._objects.items()
                      if isinstance(obj, Frame))

    def inspect_frame(self, frame_id: int) -> bytes:
        """Harness-side raw frame access, not part of the simulated user API."""
        return bytes(self._frame(frame_id).contents)

    # -- checks -------------------------------------------------------------

    def _deny(self, pid: int, operation: str, object_ref: int, detail: str):
        self.denial_log.append(DenialRecord(pid, operation, object_ref, detail))
        raise AccessDenied(f"pid {pid}: {operation} on {object_ref}: {detail}")

    def _require_cap(self, pid: int, object_ref: int, right: Right,
                     operation: str) -> Capability:
        proc = self._process(pid)
        cap = proc.cspace.find(object_ref, right)
        if cap is None and not self._skip_capability_checks:
            self._deny(pid, operation, object_ref, f"missing {right.value} capability")
        return cap or Capability(object_ref, frozenset({right}))

    # -- boot ---------------------------------------------------------------

    @classmethod
    def kernel_boot(cls, kernel_image: bytes, attest_image: bytes,
                    total_user_frames: int) -> "Kernel":
        """Bring up the platform around a verified payload.

        Only the boot chain calls this, after signature and hash checks have
        passed. The initial (attestation) process is created at the highest
        priority holding capabilities to every non-kernel frame.
        """
        import hashlib

        if not attest_image:
            raise ValueError("attestation image must not be empty")
        attest_frames_needed = -(-len(attest_image) // PAGE_SIZE)
        if total_user_frames < attest_frames_needed:
            raise OutOfFrames("attestation image does not fit in user frames")

        kernel = cls()
        kernel.kernel_image_digest = hashlib.sha256(kernel_image).digest()
        frames = [kernel._new_frame() for _ in range(total_user_frames)]

        image_frames = frames[:attest_frames_needed]
        for i, frame in enumerate(image_frames):
            chunk = attest_image[i * PAGE_SIZE:(i + 1) * PAGE_SIZE]
            frame.contents[:len(chunk)] = chunk

        pid = kernel._next_pid
        kernel._next_pid += 1

        tcb = Tcb(kernel._alloc_ref(), pid, MAX_PRIORITY)
        kernel._objects[tcb.object_ref] = tcb
        fault_ep = Endpoint(kernel._alloc_ref(), receiver_pid=pid)
        kernel._objects[fault_ep.object_ref] = fault_ep
        root = kernel._new_cnode()
        cspace = CSpace(root)

        cspace.insert(kernel, Capability(root.object_ref,
                                         frozenset({Right.READ, Right.WRITE})))
        cspace.insert(kernel, Capability(fault_ep.object_ref,
                                         frozenset({Right.WRITE})))
        cspace.insert(kernel, Capability(tcb.object_ref,
                                         frozenset({Right.READ, Right.WRITE})))
        for frame in frames:
            cspace.insert(kernel, Capability(frame.frame_id,
                                             frozenset({Right.READ, Right.WRITE})))

        vspace = VSpace()
        for vpn, frame in enumerate(image_frames):
            vspace.map_page(vpn, frame.frame_id,
                            frozenset({Right.READ, Right.WRITE}))

        kernel.processes[pid] = ProcessRecord(
            pid=pid, name="attest", tcb=tcb, cspace=cspace, vspace=vspace,
            image_start=0, image_len=len(attest_image),
            image_frames=[f.frame_id for f in image_frames])
        kernel.attest_pid = pid
        kernel.attest_frame_ids = frozenset(f.frame_id for f in image_frames)
        kernel.attest_tcb_ref = tcb.object_ref
        kernel.boot_snapshot = b"".join(bytes(f.contents) for f in image_frames)
        kernel._make_runnable(pid)
        return kernel

    # -- process management -------------------------------------------------

    def spawn_process(self, parent_pid: int, image: bytes, priority: int,
                      granted: Iterable[Capability] = (),
                      name: str = "") -> int:
        parent = self._process(parent_pid)
        granted = list(granted)
        if not image:
            raise ValueError("process image must not be empty")
        if not 0 <= priority <= MAX_PRIORITY:
            raise ValueError(f"priority {priority} out of range")
        if priority > parent.tcb.priority:
            raise PriorityEscalation(
                f"spawn at {priority} above parent priority {parent.tcb.priority}")
        for cap in granted:
            if not parent.cspace.dominates(cap):
                raise GrantWithoutCapability(
                    f"pid {parent_pid} does not hold {cap}")

        frames_needed = -(-len(image) // PAGE_SIZE)
        free = self._free_frames_for(parent)
        if len(free) < frames_needed:
            raise OutOfFrames(
                f"need {frames_needed} frames, {len(free)} available")
        image_frames = free[:frames_needed]
        for i, frame in enumerate(image_frames):
            chunk = image[i * PAGE_SIZE:(i + 1) * PAGE_SIZE]
            frame.contents[:] = bytes(PAGE_SIZE)
            frame.contents[:len(chunk)] = chunk

        pid = self._next_pid
        self._next_pid += 1
        tcb = Tcb(self._alloc_ref(), pid, priority)
        self._objects[tcb.object_ref] = tcb
        fault_ep = Endpoint(self._alloc_ref(), receiver_pid=parent_pid)
        self._objects[fault_ep.object_ref] = fault_ep
        root = self._new_cnode()
        cspace = CSpace(root)
        cspace.insert(self, Capability(root.object_ref,
                                       frozenset({Right.READ, Right.WRITE})))
        cspace.insert(self, Capability(fault_ep.object_ref,
                                       frozenset({Right.WRITE})))
        for cap in granted:
            cspace.insert(self, cap)

        # Fresh page directory: the child's address space starts empty and
        # receives only its own image pages.
        vspace = VSpace()
        for vpn, frame in enumerate(image_frames):
            vspace.map_page(vpn, frame.frame_id,
                            frozenset({Right.READ, Right.WRITE}))

        self.processes[pid] = ProcessRecord(
            pid=pid, name=name or f"proc{pid}", tcb=tcb, cspace=cspace,
            vspace=vspace, image_start=0, image_len=len(image),
            image_frames=[f.frame_id for f in image_frames])
        parent.cspace.insert(self, Capability(
            tcb.object_ref, frozenset({Right.READ, Right.WRITE})))
        self._make_runnable(pid)
        return pid

    def _free_frames_for(self, parent: ProcessRecord) -> list[Frame]:
        mapped: set[int] = set()
        for proc in self.processes.values():
            mapped |= proc.vspace.mapped_frames()
        free = []
        for ref in self.all_frame_ids():
            if ref in mapped:
                continue
            if parent.cspace.find(ref, Right.WRITE) is None:
                continue
            free.append(self._frame(ref))
        return free

    # -- memory: kernel path (capability-checked) ---------------------------

    def read_memory(self, caller_pid: int, frame_ref: int,
                    offset: int, length: int) -> bytes:
        frame = self._frame(frame_ref)
        if offset < 0 or length < 0 or offset + length > PAGE_SIZE:
            raise RangeOutOfBounds(f"offset {offset} length {length}")
        self._require_cap(caller_pid, frame_ref, Right.READ, "read_memory")
        return bytes(frame.contents[offset:offset + length])

    def write_memory(self, caller_pid: int, frame_ref: int,
                     offset: int, data: bytes) -> None:
        frame = self._frame(frame_ref)
        if offset < 0 or offset + len(data) > PAGE_SIZE:
            raise RangeOutOfBounds(f"offset {offset} length {len(data)}")
        self._require_cap(caller_pid, frame_ref, Right.WRITE, "write_memory")
        frame.contents[offset:offset + len(data)] = data

    # -- memory: MMU path (mapping-checked) ---------------------------------

    def _walk(self, caller_pid: int, vaddr: int, length: int, right: Right,
              operation: str) -> list[tuple[Frame, int, int]]:
        proc = self._process(caller_pid)
        if vaddr < 0 or length < 0:
            raise RangeOutOfBounds(f"vaddr {vaddr} length {length}")
        pieces = []
        pos = vaddr
        remaining = length
        while remaining > 0:
            vpn, page_off = divmod(pos, PAGE_SIZE)
            entry = proc.vspace.lookup(vpn)
            if entry is None or (right not in entry.rights
                                 and not self._skip_capability_checks):
                self._deny(caller_pid, operation, vpn,
                           f"page fault: no {right.value} mapping")
            take = min(remaining, PAGE_SIZE - page_off)
            pieces.append((self._frame(entry.frame_id), page_off, take))
            pos += take
            remaining -= take
        return pieces

    def vspace_read(self, caller_pid: int, vaddr: int, length: int) -> bytes:
        pieces = self._walk(caller_pid, vaddr, length, Right.READ, "vspace_read")
        return b"".join(bytes(f.contents[off:off + n]) for f, off, n in pieces)

    def vspace_write(self, caller_pid: int, vaddr: int, data: bytes) -> None:
        pieces = self._walk(caller_pid, vaddr, len(data), Right.WRITE, "vspace_write")
        pos = 0
        for frame, off, n in pieces:
            frame.contents[off:off + n] = data[pos:pos + n]
            pos += n

    # -- capability transfer ------------------------------------------------

    def create_endpoint(self, caller_pid: int, receiver_pid: int,
                        grant: bool = False) -> int:
        self._process(caller_pid)
        self._process(receiver_pid)
        ep = Endpoint(self._alloc_ref(), receiver_pid=receiver_pid)
        self._objects[ep.object_ref] = ep
        rights = {Right.WRITE, Right.GRANT} if grant else {Right.WRITE}
        self._process(caller_pid).cspace.insert(
            self, Capability(ep.object_ref, frozenset(rights)))
        return ep.object_ref

    def transfer_capability(self, sender_pid: int, endpoint_ref: int,
                            cap: Capability) -> None:
        """Copy a held capability to the endpoint's receiver (copy, not move)."""
        sender = self._process(sender_pid)
        ep = self._objects.get(endpoint_ref)
        if not isinstance(ep, Endpoint):
            raise KernelError(f"object {endpoint_ref} is not an endpoint")
        ep_cap = sender.cspace.find(endpoint_ref, Right.GRANT)
        if ep_cap is None and not self._skip_capability_checks:
            raise NoGrantRight(
                f"pid {sender_pid} has no grant right on endpoint {endpoint_ref}")
        if not sender.cspace.dominates(cap):
            raise GrantWithoutCapability(f"pid {sender_pid} does not hold {cap}")
        receiver = self._process(ep.receiver_pid)
        receiver.cspace.insert(self, cap)

    def list_capabilities(self, pid: int) -> list[Capability]:
        return list(self._process(pid).cspace.capabilities())

    # -- priorities and scheduling ------------------------------------------

    def set_priority(self, caller_pid: int, tcb_ref: int, new_priority: int) -> None:
        tcb = self._objects.get(tcb_ref)
        if not isinstance(tcb, Tcb):
            raise KernelError(f"object {tcb_ref} is not a TCB")
        if not 0 <= new_priority <= MAX_PRIORITY:
            raise ValueError(f"priority {new_priority} out of range")
        self._require_cap(caller_pid, tcb_ref, Right.WRITE, "set_priority")
        if new_priority > tcb.priority and not self._allow_priority_raise:
            raise PriorityEscalation(
                f"raise {tcb.priority} -> {new_priority} refused")
        self._scheduler_remove(tcb.process_id)
        tcb.priority = new_priority
        if tcb.process_id not in self._blocked:
            self._run_queues.setdefault(new_priority, deque()).append(tcb.process_id)
        else:
            self._blocked.add(tcb.process_id)

    def _make_runnable(self, pid: int) -> None:
        self._blocked.discard(pid)
        prio = self._process(pid).tcb.priority
        queue = self._run_queues.setdefault(prio, deque())
        if pid not in queue:
            queue.append(pid)

    def _scheduler_remove(self, pid: int) -> None:
        for queue in self._run_queues.values():
            try:
                queue.remove(pid)
            except ValueError:
                pass

    def block(self, pid: int) -> None:
        """Mark a process as waiting; it leaves the run queues."""
        self._process(pid)
        self._scheduler_remove(pid)
        self._blocked.add(pid)

    def unblock(self, pid: int) -> None:
        if pid in self._blocked:
            self._make_runnable(pid)

    def schedule_next(self) -> Optional[int]:
        """Pick the next process to run: strict priority, round-robin among
        equals (each call is one time slice)."""
        for prio in sorted(self._run_queues, reverse=True):
            queue = self._run_queues[prio]
            if queue:
                pid = queue.popleft()
                queue.append(pid)
                self.schedule_log.append(pid)
                return pid
        return None

    # -- foreign memory views ----------------------------------------------

    def map_foreign_frames(self, caller_pid: int, target_pid: int,
                           start: int, end: int) -> ForeignView:
        """Map target image bytes [start, end] (inclusive) read-only into the
        caller's address space."""
        caller = self._process(caller_pid)
        target = self._process(target_pid)
        if end < start or start < 0 or end >= target.image_len:
            raise RangeOutOfBounds(
                f"[{start}, {end}] outside image of {target.image_len} bytes")
        first = start // PAGE_SIZE
        last = end // PAGE_SIZE
        frame_ids = target.image_frames[first:last + 1]
        for ref in frame_ids:
            self._require_cap(caller_pid, ref, Right.READ, "map_foreign_frames")
        vpns = caller.vspace.allocate_view_vpns(len(frame_ids))
        for vpn, ref in zip(vpns, frame_ids):
            caller.vspace.map_page(vpn, ref, frozenset({Right.READ}),
                                   borrowed=True)
        return ForeignView(self, caller_pid, target_pid,
                           start - first * PAGE_SIZE,
                           end - first * PAGE_SIZE, vpns, frame_ids)

    # -- audit --------------------------------------------------------------

    def attest_private_frames(self) -> set[int]:
        """Frames the attestation process maps for itself (borrowed foreign
        views excluded: those are target memory, shared by design)."""
        attest = self._process(self.attest_pid)
        return attest.vspace.mapped_frames(include_borrowed=False)

    def audit_configuration(self) -> AuditReport:
        """Check the three exclusivity rules: the attestation process alone
        may reach its binary+key frames (C1), its TCB (C2), and the frames
        of its private address space (C3)."""
        violations: list[AuditViolation] = []
        private = self.attest_private_frames()
        for pid, proc in self.processes.items():
            if pid == self.attest_pid:
                continue
            for cap in proc.cspace.capabilities():
                ref = cap.object_ref
                if ref in self.attest_frame_ids:
                    violations.append(AuditViolation(
                        "C1", pid, ref, "capability to attestation binary frame"))
                elif ref == self.attest_tcb_ref:
                    violations.append(AuditViolation(
                        "C2", pid, ref, "capability to attestation TCB"))
                elif ref in private:
                    violations.append(AuditViolation(
                        "C3", pid, ref, "capability to attestation VSpace frame"))
            for vpn, entry in proc.vspace.entries():
                if entry.frame_id in self.attest_frame_ids:
                    violations.append(AuditViolation(
                        "C1", pid, entry.frame_id,
                        f"attestation binary frame mapped at vpn {vpn}"))
                elif entry.frame_id in private:
                    violations.append(AuditViolation(
                        "C3", pid, entry.frame_id,
                        f"attestation VSpace frame mapped at vpn {vpn}"))
        return AuditReport(violations)

    def attest_image_bytes(self) -> bytes:
        """Current contents of the attestation binary, image length exact."""
        attest = self._process(self.attest_pid)
        joined = b"".join(self.inspect_frame(ref)
                          for ref in attest.image_frames)
        return joined[:attest.image_len]


def kernel_boot(kernel_image: bytes, attest_image: bytes,
                total_user_frames: int) -> Kernel:
    """Module-level alias used by the boot chain; see Kernel.kernel_boot."""
    return Kernel.kernel_boot(kernel_image, attest_image, total_user_frames)
