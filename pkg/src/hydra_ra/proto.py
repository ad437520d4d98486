"""Wire protocol between verifier and prover, plus both endpoints.

Frames are length-prefixed: a 4-byte big-endian payload length, then the
payload. Payloads start with the magic "HYDR", a one-byte version (0x01)
and a one-byte message kind:

    0x01 request  body = 28-byte header || auth tag
    0x02 report   body = 28-byte header || report tag
    0x03 error    body = 1-byte code   || 28-byte echoed header

The header layout is shared with the attestation service: big-endian
timestamp (u64 ms), target pid (u32), range start (u64), range end (u64).
All integers on the wire are big-endian. A prover answers an unauthentic
or stale request by closing the connection without sending anything.
"""
from __future__ import annotations

import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .attest import (HEADER, AttestReport, AttestRequest, AttestService,
                     ErrorIndication, RequestErrorCode, make_request)
from .crypto import VALID_TAG_LENGTHS, MacSuite

MAGIC = b"HYDR"
VERSION = 0x01

KIND_REQUEST = 0x01
KIND_REPORT = 0x02
KIND_ERROR = 0x03

_LEN = struct.Struct(">I")
MAX_FRAME = 1 << 20


class ProtocolError(Exception):
    pass


def encode_frame(kind: int, body: bytes) -> bytes:
    payload = MAGIC + bytes([VERSION, kind]) + body
    return _LEN.pack(len(payload)) + payload


def decode_payload(payload: bytes) -> tuple[int, bytes]:
    if len(payload) < 6:
        raise ProtocolError("short payload")
    if payload[:4] != MAGIC:
        raise ProtocolError("bad magic")
    if payload[4] != VERSION:
        raise ProtocolError(f"unsupported version {payload[4]}")
    kind = payload[5]
    if kind not in (KIND_REQUEST, KIND_REPORT, KIND_ERROR):
        raise ProtocolError(f"unknown kind {kind}")
    return kind, payload[6:]


def encode_request(request: AttestRequest) -> bytes:
    return encode_frame(KIND_REQUEST, request.header() + request.auth_tag)


def decode_request(body: bytes) -> AttestRequest:
    if len(body) < HEADER.size:
        raise ProtocolError("request body shorter than header")
    timestamp, pid, start, end = HEADER.unpack(body[:HEADER.size])
    tag = body[HEADER.size:]
    if len(tag) not in VALID_TAG_LENGTHS:
        raise ProtocolError(f"auth tag of {len(tag)} bytes")
    return AttestRequest(timestamp, pid, start, end, tag)


def encode_report(report: AttestReport) -> bytes:
    return encode_frame(KIND_REPORT, report.header + report.tag)


def decode_report(body: bytes) -> AttestReport:
    if len(body) < HEADER.size:
        raise ProtocolError("report body shorter than header")
    tag = body[HEADER.size:]
    if len(tag) not in VALID_TAG_LENGTHS:
        raise ProtocolError(f"report tag of {len(tag)} bytes")
    return AttestReport(body[:HEADER.size], tag)


def encode_error(error: ErrorIndication) -> bytes:
    return encode_frame(KIND_ERROR, bytes([error.code]) + error.header)


def decode_error(body: bytes) -> ErrorIndication:
    if len(body) != 1 + HEADER.size:
        raise ProtocolError("error body size")
    try:
        code = RequestErrorCode(body[0])
    except ValueError:
        raise ProtocolError(f"unknown error code {body[0]}") from None
    return ErrorIndication(code, body[1:])


def _read_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining > 0:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError("peer closed")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    (length,) = _LEN.unpack(_read_exact(sock, _LEN.size))
    if length > MAX_FRAME:
        raise ProtocolError(f"frame of {length} bytes")
    return decode_payload(_read_exact(sock, length))


# -- prover side -------------------------------------------------------------

class ProverServer:
    """TCP front end for one attestation service.

    One request per connection. The service is not reentrant (it owns the
    scheduler interaction), so handling serializes on a lock; concurrent
    verifiers queue up rather than interleave.
    """

    def __init__(self, service: AttestService, host: str = "127.0.0.1",
                 port: int = 0):
        self.service = service
        self._lock = threading.Lock()
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                try:
                    kind, body = read_frame(self.request)
                    if kind != KIND_REQUEST:
                        return
                    request = decode_request(body)
                except (ProtocolError, ConnectionError, OSError):
                    return
                with outer._lock:
                    result = outer.service.attest(request)
                if result is None:
                    return  # silence: close without a byte
                if isinstance(result, ErrorIndication):
                    self.request.sendall(encode_error(result))
                else:
                    self.request.sendall(encode_report(result))

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        self._server = Server((host, port), Handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "ProverServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="prover", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self) -> "ProverServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


# -- verifier side -----------------------------------------------------------

class Verdict(Enum):
    TRUSTED = "trusted"
    MODIFIED = "modified"
    NO_RESPONSE = "no_response"
    ERROR = "error"


@dataclass(frozen=True)
class VerifierResult:
    verdict: Verdict
    error_code: Optional[RequestErrorCode] = None
    report: Optional[AttestReport] = None
    round_trip_ns: int = 0

    @property
    def exit_code(self) -> int:
        return {Verdict.TRUSTED: 0, Verdict.MODIFIED: 1,
                Verdict.NO_RESPONSE: 2, Verdict.ERROR: 3}[self.verdict]


class VerifierClock:
    """Strictly increasing millisecond timestamps.

    Two requests in the same wall-clock millisecond would trip the
    prover's monotonicity rule, so the clock never repeats a value.
    """

    def __init__(self, now_ms: Callable[[], int] | None = None):
        self._now = now_ms or (lambda: time.time_ns() // 1_000_000)
        self._last = 0
        self._lock = threading.Lock()

    def next_ms(self) -> int:
        with self._lock:
            self._last = max(self._now(), self._last + 1)
            return self._last


def exchange(address: tuple[str, int], frame: bytes,
             timeout: float = 5.0) -> Optional[tuple[int, bytes]]:
    """Send one frame, read one frame. None when the peer stays silent."""
    with socket.create_connection(address, timeout=timeout) as sock:
        sock.settimeout(timeout)
        sock.sendall(frame)
        try:
            return read_frame(sock)
        except (ConnectionError, socket.timeout, TimeoutError):
            return None


def verifier_attest(address: tuple[str, int], suite: MacSuite,
                    target_pid: int, start: int, end: int,
                    expected_image: bytes,
                    timestamp: int | None = None,
                    clock: VerifierClock | None = None,
                    timeout: float = 5.0) -> VerifierResult:
    """Challenge the prover and appraise the answer.

    TRUSTED means the report MAC matches a local recomputation over the
    bytes the target is expected to have in [start, end].
    """
    import hmac as _hmac

    from .attest import expected_report_tag

    if timestamp is None:
        timestamp = (clock or VerifierClock()).next_ms()
    request = make_request(suite, timestamp, target_pid, start, end)
    t0 = time.perf_counter_ns()
    try:
        answer = exchange(address, encode_request(request), timeout)
    except (ConnectionError, OSError):
        return VerifierResult(Verdict.NO_RESPONSE)
    rtt = time.perf_counter_ns() - t0
    if answer is None:
        return VerifierResult(Verdict.NO_RESPONSE, round_trip_ns=rtt)
    try:
        kind, body = answer
        if kind == KIND_ERROR:
            error = decode_error(body)
            return VerifierResult(Verdict.ERROR, error_code=error.code,
                                  round_trip_ns=rtt)
        if kind != KIND_REPORT:
            return VerifierResult(Verdict.NO_RESPONSE, round_trip_ns=rtt)
        report = decode_report(body)
    except ProtocolError:
        return VerifierResult(Verdict.NO_RESPONSE, round_trip_ns=rtt)
    if report.header != request.header():
        return VerifierResult(Verdict.MODIFIED, report=report, round_trip_ns=rtt)
    expected = expected_report_tag(suite, report.header,
                                   expected_image[start:end + 1])
    if _hmac.compare_digest(expected, report.tag):
        return VerifierResult(Verdict.TRUSTED, report=report, round_trip_ns=rtt)
    return VerifierResult(Verdict.MODIFIED, report=report, round_trip_ns=rtt)
