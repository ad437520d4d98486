"""Performance harness.

Everything here reports relative, hardware-independent properties: how MAC
cost scales with input size, how attestation cost scales with the number
of resident processes, and how the three request phases split the total.
Absolute numbers depend on the machine and are recorded, not judged.

Rows share one CSV schema: algorithm,size_bytes,processes,metric,value_ns.
Time metrics are integer nanoseconds (medians over repetitions, warm-up
discarded). Fit metrics (slope, intercept, r2, ratios) reuse the value_ns
column as plain numbers; the metric name says what the number is.
"""
from __future__ import annotations

import csv
import io
import json
import random
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import boot
from .attest import (AttestReport, AttestService, TimestampStore,
                     UserProcessSpec, make_request, pack_attest_image)
from .crypto import MacAlgorithm, MacSuite, blockmac, compute_mac
from .manifest import DEFAULT_SERVICE_CODE, NAME_BY_ALG, stream_bytes

MIB = 1 << 20
ALL_ALGORITHMS = tuple(MacAlgorithm)
DEFAULT_SIZES = tuple((i + 1) * MIB for i in range(10))
DEFAULT_PROCESS_COUNTS = tuple(range(2, 21, 2))
PROCESS_TARGET_BYTES = 100 * 1024

CSV_FIELDS = ("algorithm", "size_bytes", "processes", "metric", "value_ns")


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    size_bytes: int
    processes: int
    metric: str
    value_ns: float


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def write_csv(rows: Iterable[BenchRow], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def rows_to_json(rows: Iterable[BenchRow]) -> str:
    return json.dumps([asdict(row) for row in rows], indent=2)


def fit_linear(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    """Least-squares line through (xs, ys) with coefficient of determination."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    a = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return LinearFit(float(slope), float(intercept), r2)


def median_time_ns(fn: Callable[[], object], repetitions: int,
                   warmup: int = 2) -> int:
    # Collector pauses otherwise land inside individual samples and wreck
    # the linearity of size sweeps.
    import gc

    for _ in range(warmup):
        fn()
    samples = []
    was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            fn()
            samples.append(time.perf_counter_ns() - t0)
    finally:
        if was_enabled:
            gc.enable()
    return int(statistics.median(samples))


def interleaved_median_ns(fns: Sequence[Callable[[], object]],
                          repetitions: int, warmup: int = 2) -> list[int]:
    """Median time of each callable, sampled round-robin.

    Round-robin ordering spreads any transient host disturbance across all
    callables instead of letting it poison every sample of a single one,
    which matters when the medians feed a linearity fit.
    """
    import gc

    for fn in fns:
        for _ in range(warmup):
            fn()
    samples: list[list[int]] = [[] for _ in fns]
    was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for _ in range(repetitions):
            for slot, fn in enumerate(fns):
                t0 = time.perf_counter_ns()
                fn()
                samples[slot].append(time.perf_counter_ns() - t0)
    finally:
        if was_enabled:
            gc.enable()
    return [int(statistics.median(s)) for s in samples]


def _bench_key(algorithm: MacAlgorithm) -> bytes:
    return stream_bytes(f"bench-{algorithm.name}", algorithm.key_size)


def _buffer(size: int, seed: int = 7) -> bytes:
    return random.Random(seed).randbytes(size)


# -- MAC primitive benchmarks ------------------------------------------------

def bench_mac_algorithms(sizes: Sequence[int] = (MIB,),
                         algorithms: Sequence[MacAlgorithm] = ALL_ALGORITHMS,
                         repetitions: int = 30) -> list[BenchRow]:
    """Median one-shot MAC time per algorithm and size."""
    blockmac.warm_up()
    rows = []
    for size in sizes:
        data = _buffer(size)
        for algorithm in algorithms:
            key = _bench_key(algorithm)
            ns = median_time_ns(lambda: compute_mac(algorithm, key, data),
                                repetitions)
            rows.append(BenchRow(NAME_BY_ALG[algorithm], size, 0, "mac_ns", ns))
    return rows


def bench_mac_vs_memsize(algorithms: Sequence[MacAlgorithm] = ALL_ALGORITHMS,
                         sizes: Sequence[int] = DEFAULT_SIZES,
                         repetitions: int = 9,
                         ) -> tuple[list[BenchRow], dict[MacAlgorithm, LinearFit]]:
    """MAC time across sizes plus a least-squares line per algorithm."""
    blockmac.warm_up()
    rows = []
    fits: dict[MacAlgorithm, LinearFit] = {}
    buffers = {size: _buffer(size) for size in sizes}
    for algorithm in algorithms:
        key = _bench_key(algorithm)
        fns = [
            (lambda data=buffers[size]: compute_mac(algorithm, key, data))
            for size in sizes
        ]
        medians = interleaved_median_ns(fns, repetitions)
        for size, ns in zip(sizes, medians):
            rows.append(BenchRow(NAME_BY_ALG[algorithm], size, 0, "mac_ns", ns))
        fit = fit_linear(list(sizes), medians)
        fits[algorithm] = fit
        name = NAME_BY_ALG[algorithm]
        rows.append(BenchRow(name, 0, 0, "fit_slope_ns_per_byte", fit.slope))
        rows.append(BenchRow(name, 0, 0, "fit_intercept_ns", fit.intercept))
        rows.append(BenchRow(name, 0, 0, "fit_r2", fit.r2))
    return rows, fits


def speck_headline_ns(size: int = 10_000_000, repetitions: int = 5) -> int:
    """Median Speck MAC time over `size` bytes (the 10 MB figure)."""
    blockmac.warm_up()
    data = _buffer(size)
    key = _bench_key(MacAlgorithm.SPECK_64_128_CBC)
    return median_time_ns(
        lambda: compute_mac(MacAlgorithm.SPECK_64_128_CBC, key, data),
        repetitions)


# -- full-path benchmarks ----------------------------------------------------

class _BenchDevice:
    """Booted device with N identical workload processes, frozen local clock.

    The injected counter never advances, so monotonically increasing
    request timestamps stay inside the freshness window no matter how long
    the measurement takes.
    """

    def __init__(self, algorithm: MacAlgorithm, image_size: int,
                 process_count: int, priority: int, tmpdir: str):
        blob = pack_attest_image(algorithm, _bench_key(algorithm),
                                 code=DEFAULT_SERVICE_CODE)
        pages = -(-image_size // 4096)
        frames = -(-len(blob) // 4096) + process_count * pages + 4
        self.kernel = boot.build_platform(blob, frames)
        self.service = AttestService(
            self.kernel, TimestampStore(f"{tmpdir}/tsave.bin"),
            counter=lambda: 0)
        self.image_size = image_size
        specs = [UserProcessSpec(f"load{i}",
                                 stream_bytes(f"bench-load{i}", image_size),
                                 priority)
                 for i in range(process_count)]
        self.pids = list(self.service.spawn_user_processes(specs).values())
        self._next_ts = 1

    def attest_once(self, pid: int) -> AttestReport:
        request = make_request(self.service.suite, self._next_ts, pid,
                               0, self.image_size - 1)
        self._next_ts += 1
        report = self.service.attest(request)
        assert isinstance(report, AttestReport), report
        return report


def bench_mac_vs_processes(counts: Sequence[int] = DEFAULT_PROCESS_COUNTS,
                           target_bytes: int = PROCESS_TARGET_BYTES,
                           algorithm: MacAlgorithm = MacAlgorithm.SPECK_64_128_CBC,
                           repetitions: int = 3,
                           ) -> tuple[list[BenchRow], LinearFit]:
    """Time to attest every resident process, as the count grows.

    All workload processes run at the same priority, the highest allowed
    below the attestation service.
    """
    blockmac.warm_up()
    rows = []
    totals = []
    name = NAME_BY_ALG[algorithm]
    for count in counts:
        with tempfile.TemporaryDirectory() as tmpdir:
            device = _BenchDevice(algorithm, target_bytes, count,
                                  priority=254, tmpdir=tmpdir)

            def sweep():
                for pid in device.pids:
                    device.attest_once(pid)

            ns = median_time_ns(sweep, repetitions, warmup=1)
            rows.append(BenchRow(name, target_bytes, count,
                                 "attest_all_ns", ns))
            totals.append(ns)
    fit = fit_linear(list(counts), totals)
    rows.append(BenchRow(name, target_bytes, 0, "fit_slope_ns_per_process",
                         fit.slope))
    rows.append(BenchRow(name, target_bytes, 0, "fit_r2", fit.r2))
    return rows, fit


PHASES = ("verify_request", "retrieve_mem", "mac_mem")


def bench_breakdown(sizes: Sequence[int] = (MIB, 10 * 1024),
                    algorithm: MacAlgorithm = MacAlgorithm.SPECK_64_128_CBC,
                    repetitions: int = 5) -> list[BenchRow]:
    """Per-phase medians for a full attestation of one process.

    Also reports each phase's share of the total and the
    retrieve_mem:mac_mem ratio (informative: mapping cost here is a copy,
    not real page-table work).
    """
    blockmac.warm_up()
    rows = []
    name = NAME_BY_ALG[algorithm]
    for size in sizes:
        with tempfile.TemporaryDirectory() as tmpdir:
            device = _BenchDevice(algorithm, size, 1, 100, tmpdir)
            pid = device.pids[0]
            samples: dict[str, list[int]] = {phase: [] for phase in PHASES}
            device.attest_once(pid)  # warm-up
            for _ in range(repetitions):
                device.attest_once(pid)
                for phase in PHASES:
                    samples[phase].append(device.service.last_phase_ns[phase])
        medians = {phase: int(statistics.median(samples[phase]))
                   for phase in PHASES}
        total = sum(medians.values())
        for phase in PHASES:
            rows.append(BenchRow(name, size, 1, f"{phase}_ns", medians[phase]))
            rows.append(BenchRow(name, size, 1, f"{phase}_share",
                                 medians[phase] / total))
        rows.append(BenchRow(name, size, 1, "retrieve_to_mac_ratio",
                             medians["retrieve_mem"] / medians["mac_mem"]))
    return rows


def breakdown_medians(rows: list[BenchRow], size: int) -> dict[str, int]:
    """Pull the per-phase nanosecond medians for one size out of the rows."""
    out = {}
    for row in rows:
        if row.size_bytes == size and row.metric.endswith("_ns"):
            out[row.metric[:-3]] = int(row.value_ns)
    return out
