"""Attestation service and request handling.

The service runs as the initial, highest-priority process on the platform.
Its binary image carries the attestation master key; the request-auth key
is either carried alongside or derived from the master key. A request
names a target process and a byte range of that process's image; the
response authenticates the request header together with the bytes the
target actually has in memory right now.

Request handling is deliberately split into three phases, mirrored in the
timing breakdown the benchmarks report:

  1. verify_request: freshness window plus MAC over the request header.
  2. retrieve_mem:   map the target range read-only and copy it out.
  3. mac_mem:        checksum header and memory with the master key.

An unauthentic or stale request produces no response at all (silence is
the only safe answer to an unauthenticated peer). Failures after
authentication (unknown target, bad range) produce typed errors so an
honest verifier can tell probe mistakes from tampering.
"""
from __future__ import annotations

import hmac as _hmac
import struct
import time
import zlib
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Callable, Optional

from .crypto import InvalidInput, MacAlgorithm, MacState, MacSuite, compute_mac
from .platform import Kernel, MAX_PRIORITY

HEADER = struct.Struct(">QIQQ")  # T_R ms, target pid, range start, range end

ATTEST_IMAGE_MAGIC = b"ATIM"
ATTEST_IMAGE_VERSION = 1

ALG_IDS = {
    MacAlgorithm.SPECK_64_128_CBC: 1,
    MacAlgorithm.SIMON_64_128_CBC: 2,
    MacAlgorithm.AES_128_CBC: 3,
    MacAlgorithm.HMAC_SHA_256: 4,
    MacAlgorithm.BLAKE2S_KEYED: 5,
}
IDS_ALG = {v: k for k, v in ALG_IDS.items()}

DEFAULT_FRESHNESS_WINDOW_MS = 10_000
DEFAULT_PERSIST_INTERVAL_MS = 1_000


class RequestErrorCode(IntEnum):
    UNKNOWN_PROCESS = 0x01
    RANGE_OUT_OF_BOUNDS = 0x02


@dataclass(frozen=True)
class AttestRequest:
    timestamp: int
    target_pid: int
    start: int
    end: int
    auth_tag: bytes

    def header(self) -> bytes:
        return HEADER.pack(self.timestamp, self.target_pid, self.start, self.end)


@dataclass(frozen=True)
class AttestReport:
    """Echoed request header plus MAC(master key, header || memory)."""
    header: bytes
    tag: bytes


@dataclass(frozen=True)
class ErrorIndication:
    code: RequestErrorCode
    header: bytes


def make_request(suite: MacSuite, timestamp: int, target_pid: int,
                 start: int, end: int) -> AttestRequest:
    """Verifier-side: build an authenticated request."""
    header = HEADER.pack(timestamp, target_pid, start, end)
    tag = compute_mac(suite.algorithm, suite.auth_key, header, suite.tag_length)
    return AttestRequest(timestamp, target_pid, start, end, tag)


def expected_report_tag(suite: MacSuite, header: bytes, memory: bytes) -> bytes:
    return compute_mac(suite.algorithm, suite.master_key, header + memory,
                       suite.tag_length)


def verify_report(suite: MacSuite, report: AttestReport,
                  expected_memory: bytes) -> bool:
    expected = expected_report_tag(suite, report.header, expected_memory)
    return _hmac.compare_digest(expected, report.tag)


# -- attestation binary image ------------------------------------------------

@dataclass(frozen=True)
class AttestImageParams:
    algorithm: MacAlgorithm
    master_key: bytes
    auth_key: Optional[bytes]
    tag_length: Optional[int]
    code: bytes


class AttestImageError(ValueError):
    pass


def pack_attest_image(algorithm: MacAlgorithm, master_key: bytes,
                      auth_key: bytes | None = None,
                      tag_length: int | None = None,
                      code: bytes = b"") -> bytes:
    """Serialize the attestation binary: keys plus service code.

    Layout: magic, version, algorithm id, tag length (0 means the
    algorithm default), u16-length master key, u16-length auth key
    (length 0 means derive from the master key), then code to the end.
    """
    if algorithm not in ALG_IDS:
        raise AttestImageError(f"unknown algorithm {algorithm}")
    if len(master_key) != algorithm.key_size:
        raise AttestImageError(
            f"{algorithm.name} needs a {algorithm.key_size}-byte key")
    if auth_key is not None and len(auth_key) != algorithm.key_size:
        raise AttestImageError("auth key size must match the master key")
    parts = [ATTEST_IMAGE_MAGIC,
             bytes([ATTEST_IMAGE_VERSION, ALG_IDS[algorithm], tag_length or 0, 0]),
             struct.pack(">H", len(master_key)), master_key,
             struct.pack(">H", len(auth_key) if auth_key else 0)]
    if auth_key:
        parts.append(auth_key)
    parts.append(code)
    return b"".join(parts)


def parse_attest_image(blob: bytes) -> AttestImageParams:
    if len(blob) < 10 or blob[:4] != ATTEST_IMAGE_MAGIC:
        raise AttestImageError("bad magic")
    version, alg_id, tag_length = blob[4], blob[5], blob[6]
    if version != ATTEST_IMAGE_VERSION:
        raise AttestImageError(f"unsupported version {version}")
    if alg_id not in IDS_ALG:
        raise AttestImageError(f"unknown algorithm id {alg_id}")
    offset = 8
    (klen,) = struct.unpack_from(">H", blob, offset)
    offset += 2
    if offset + klen > len(blob):
        raise AttestImageError("truncated master key")
    master_key = blob[offset:offset + klen]
    offset += klen
    if offset + 2 > len(blob):
        raise AttestImageError("truncated auth key length")
    (alen,) = struct.unpack_from(">H", blob, offset)
    offset += 2
    auth_key = None
    if alen:
        if offset + alen > len(blob):
            raise AttestImageError("truncated auth key")
        auth_key = blob[offset:offset + alen]
        offset += alen
    return AttestImageParams(IDS_ALG[alg_id], master_key, auth_key,
                             tag_length or None, blob[offset:])


# -- timestamp persistence ---------------------------------------------------

class TimestampStoreError(Exception):
    pass


class TimestampStore:
    """Last accepted verifier time, surviving power cycles.

    File format: 8-byte big-endian milliseconds plus CRC-32 of those
    bytes. Writes go through a temp file and rename so a crash leaves
    either the old or the new value, never a torn one. Stored time never
    decreases.
    """

    _REC = struct.Struct(">QI")

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def load(self) -> int:
        if not self.path.exists():
            return 0
        raw = self.path.read_bytes()
        if len(raw) != self._REC.size:
            raise TimestampStoreError(f"bad record size {len(raw)}")
        ms, crc = self._REC.unpack(raw)
        if zlib.crc32(raw[:8]) != crc:
            raise TimestampStoreError("checksum mismatch")
        return ms

    def save(self, ms: int) -> None:
        try:
            current = self.load()
        except TimestampStoreError:
            current = 0
        if ms < current:
            return
        raw = self._REC.pack(ms, zlib.crc32(struct.pack(">Q", ms)))
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_bytes(raw)
        tmp.replace(self.path)


# -- freshness ---------------------------------------------------------------

@dataclass
class FreshnessState:
    """What the prover knows about verifier time.

    Until the first authenticated request, only the persisted timestamp
    bounds acceptable values from below. From then on the local counter
    extrapolates verifier time and requests must fall inside the window
    and advance strictly.
    """
    saved: int
    first: Optional[int] = None
    origin: Optional[int] = None
    last_accepted: Optional[int] = None

    def current_time(self, local_ms: int) -> Optional[int]:
        if self.first is None:
            return None
        return self.first + (local_ms - self.origin)


def check_freshness(state: FreshnessState, timestamp: int, local_ms: int,
                    window_ms: int) -> bool:
    if state.first is None:
        return timestamp > state.saved
    current = state.current_time(local_ms)
    if abs(timestamp - current) > window_ms:
        return False
    if state.last_accepted is not None and timestamp <= state.last_accepted:
        return False
    return True


# -- the service -------------------------------------------------------------

@dataclass(frozen=True)
class AttestConfig:
    freshness_window_ms: int = DEFAULT_FRESHNESS_WINDOW_MS
    persist_interval_ms: int = DEFAULT_PERSIST_INTERVAL_MS


@dataclass(frozen=True)
class UserProcessSpec:
    name: str
    image: bytes
    priority: int = 100


def _default_counter() -> int:
    return time.monotonic_ns() // 1_000_000


class AttestService:
    """The measurement process. Construct it on a freshly booted kernel.

    Key material is read from the service's own image through its own
    address space; nothing outside the attestation frames ever stores
    the keys. The service idles blocked and runs only while handling a
    request, one scheduler slice per phase.
    """

    def __init__(self, kernel: Kernel, store: TimestampStore,
                 counter: Callable[[], int] | None = None,
                 config: AttestConfig = AttestConfig()):
        self.kernel = kernel
        self.pid = kernel.attest_pid
        self.config = config
        self.store = store
        self._counter = counter or _default_counter
        params = parse_attest_image(self._read_own_image())
        self.suite = MacSuite.build(params.algorithm, params.master_key,
                                    params.auth_key, params.tag_length)
        self.freshness = FreshnessState(saved=store.load())
        self._last_persist: Optional[int] = None
        self._spawn_images: dict[int, bytes] = {}
        self.user_pids: dict[str, int] = {}
        self.last_phase_ns: dict[str, int] = {}
        self.last_trace: list[int] = []
        # Sabotage switches for the adversary harness; never set in
        # production paths.
        self._skip_request_auth = False
        self._skip_freshness = False
        self._attest_cached_image = False
        kernel.block(self.pid)

    def _read_own_image(self) -> bytes:
        record = self.kernel.processes[self.pid]
        return self.kernel.vspace_read(self.pid, 0, record.image_len)

    def spawn_user_processes(self, specs: list[UserProcessSpec]) -> dict[str, int]:
        """Start the workload: every user process sits strictly below the
        service's priority and begins with an empty grant list."""
        pids: dict[str, int] = {}
        for spec in specs:
            if spec.priority >= MAX_PRIORITY:
                raise ValueError(
                    f"{spec.name}: user priority must be below {MAX_PRIORITY}")
            pid = self.kernel.spawn_process(self.pid, spec.image, spec.priority,
                                            granted=[], name=spec.name)
            self._spawn_images[pid] = spec.image
            pids[spec.name] = pid
        self.user_pids.update(pids)
        return pids

    # -- request handling ---------------------------------------------------

    def verify_request(self, request: AttestRequest) -> bool:
        expected = compute_mac(self.suite.algorithm, self.suite.auth_key,
                               request.header(), self.suite.tag_length)
        return _hmac.compare_digest(expected, request.auth_tag)

    def _run_slice(self) -> None:
        self.last_trace.append(self.kernel.schedule_next())

    def attest(self, request: AttestRequest):
        """Handle one request.

        Returns an AttestReport, an ErrorIndication, or None for silence.
        """
        self.last_phase_ns = {}
        self.last_trace = []
        self.kernel.unblock(self.pid)
        try:
            return self._attest_inner(request)
        finally:
            self.kernel.block(self.pid)

    def _attest_inner(self, request: AttestRequest):
        t0 = time.perf_counter_ns()
        self._run_slice()
        local = self._counter()
        # Freshness gates the MAC: stale requests are dropped before any
        # cryptographic work is spent on them.
        fresh = (self._skip_freshness
                 or check_freshness(self.freshness, request.timestamp, local,
                                    self.config.freshness_window_ms))
        if not fresh:
            self.last_phase_ns["verify_request"] = time.perf_counter_ns() - t0
            return None
        if not (self._skip_request_auth or self.verify_request(request)):
            self.last_phase_ns["verify_request"] = time.perf_counter_ns() - t0
            return None
        # Commit timestamp state only now: an attacker must not be able to
        # move the clock with requests that fail the MAC.
        if self.freshness.first is None:
            self.freshness.first = request.timestamp
            self.freshness.origin = local
        self.freshness.last_accepted = request.timestamp
        self._maybe_persist(request.timestamp)
        t1 = time.perf_counter_ns()
        self.last_phase_ns["verify_request"] = t1 - t0

        self._run_slice()
        header = request.header()
        target = self.kernel.processes.get(request.target_pid)
        if target is None:
            self.last_phase_ns["retrieve_mem"] = time.perf_counter_ns() - t1
            return ErrorIndication(RequestErrorCode.UNKNOWN_PROCESS, header)
        if (request.start > request.end or request.start < 0
                or request.end >= target.image_len):
            self.last_phase_ns["retrieve_mem"] = time.perf_counter_ns() - t1
            return ErrorIndication(RequestErrorCode.RANGE_OUT_OF_BOUNDS, header)
        if self._attest_cached_image and request.target_pid in self._spawn_images:
            memory = self._spawn_images[request.target_pid][
                request.start:request.end + 1]
        else:
            with self.kernel.map_foreign_frames(
                    self.pid, request.target_pid,
                    request.start, request.end) as view:
                memory = view.read()
        t2 = time.perf_counter_ns()
        self.last_phase_ns["retrieve_mem"] = t2 - t1

        self._run_slice()
        state = MacState(self.suite.algorithm, self.suite.master_key,
                         self.suite.tag_length)
        state.update(header)
        state.update(memory)
        tag = state.final()
        self.last_phase_ns["mac_mem"] = time.perf_counter_ns() - t2
        return AttestReport(header, tag)

    # -- clock --------------------------------------------------------------

    def current_time_ms(self) -> Optional[int]:
        return self.freshness.current_time(self._counter())

    def _maybe_persist(self, timestamp: int) -> None:
        if (self._last_persist is None
                or timestamp - self._last_persist >= self.config.persist_interval_ms):
            self.store.save(timestamp)
            self._last_persist = timestamp

    def shutdown(self) -> None:
        """Persist the best current estimate of verifier time."""
        now = self.current_time_ms()
        if now is not None:
            self.store.save(now)
        elif self.freshness.last_accepted is not None:
            self.store.save(self.freshness.last_accepted)
