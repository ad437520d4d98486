"""Release gate: eight end-to-end checks with one printed verdict line each.

Run `pytest tests/test_acceptance.py -v -s` to see the scorecard. Every
test prints its ACCEPTANCE line before asserting, so a red run still
shows which gate failed and why.
"""
import dataclasses
import random
import socket
import time

import pytest

from hydra_ra import advsim
from hydra_ra.attest import AttestRequest, make_request
from hydra_ra.bench import (MIB, bench_breakdown, bench_mac_vs_memsize,
                            breakdown_medians, speck_headline_ns)
from hydra_ra.boot import (DEFAULT_KERNEL_BLOB, BootRefused, FusedRom,
                           full_boot, pack_boot_image)
from hydra_ra.crypto import (MacAlgorithm, MacState, SignatureKeyPair,
                             blake2s_keyed, blockmac, compute_mac,
                             hmac_sha256, simon, speck)
from hydra_ra.manifest import (UserProcessSpec, demo_manifest,
                               provision_device, stream_bytes)
from hydra_ra.modelcheck import check_authority_confinement
from hydra_ra.proto import ProverServer, Verdict, encode_request, exchange, verifier_attest

CIPHER_MACS = (MacAlgorithm.SPECK_64_128_CBC, MacAlgorithm.SIMON_64_128_CBC,
               MacAlgorithm.AES_128_CBC)


def _report(number: int, name: str, problems: list[str], elapsed: float,
            budget_s: float | None = None) -> None:
    if budget_s is not None and elapsed > budget_s:
        problems.append(f"runtime {elapsed:.2f}s over the {budget_s:.0f}s budget")
    verdict = "PASS" if not problems else "FAIL"
    print(f"\nACCEPTANCE {number} ({name}): {verdict} [{elapsed:.2f}s]")
    assert not problems, "; ".join(problems)


@pytest.fixture(scope="module", autouse=True)
def warm_jit():
    # One-time compile cost must not land inside a timed criterion.
    blockmac.warm_up()


def test_1_crypto_reference_vectors():
    problems = []
    t0 = time.perf_counter()

    key = bytes.fromhex("1b1a1918131211100b0a090803020100")
    if speck.encrypt_block(key, bytes.fromhex("3b7265747475432d")) != \
            bytes.fromhex("8c6fa548454e028b"):
        problems.append("Speck-64/128 designers' vector mismatch")
    if simon.encrypt_block(key, bytes.fromhex("656b696c20646e75")) != \
            bytes.fromhex("44c8fc20b9dfa07a"):
        problems.append("Simon-64/128 designers' vector mismatch")
    if hmac_sha256(b"\x0b" * 20, b"Hi There").hex() != (
            "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"):
        problems.append("HMAC-SHA-256 vector 1 mismatch")
    if hmac_sha256(b"Jefe", b"what do ya want for nothing?").hex() != (
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"):
        problems.append("HMAC-SHA-256 vector 2 mismatch")
    if blake2s_keyed(bytes(range(32)), b"").hex() != (
            "48a8997da407876b3d79c0d92325ad3b89cbb754d86ab71aee047ad345fd2c49"):
        problems.append("keyed BLAKE2s vector mismatch")

    rng = random.Random(20240)
    for trial in range(100):
        algorithm = CIPHER_MACS[trial % len(CIPHER_MACS)]
        mac_key = rng.randbytes(algorithm.key_size)
        message = rng.randbytes(rng.randrange(0, 2048))
        state = MacState(algorithm, mac_key)
        cuts = sorted(rng.sample(range(len(message) + 1),
                                 min(len(message), rng.randrange(0, 10))))
        prev = 0
        for cut in cuts + [len(message)]:
            state.update(message[prev:cut])
            prev = cut
        if state.final() != compute_mac(algorithm, mac_key, message):
            problems.append(f"streaming != one-shot on chunking {trial}")
            break

    _report(1, "crypto reference vectors and streaming", problems,
            time.perf_counter() - t0, budget_s=1.0)


def test_2_attestation_soundness(tmp_path):
    problems = []
    t0 = time.perf_counter()

    manifest = dataclasses.replace(
        demo_manifest(device="acceptance-prover"),
        processes=(
            UserProcessSpec("target", stream_bytes("acc-target", 4096), 120),
            UserProcessSpec("mid", stream_bytes("acc-mid", 16384), 110),
            UserProcessSpec("big", stream_bytes("acc-big", 65536), 100)))
    clock = [1_000_000]
    kernel, service, pids = provision_device(
        manifest, tmp_path / "ts.bin", counter=lambda: clock[0])
    suite = manifest.suite()
    images = {spec.name: spec.image for spec in manifest.processes}
    ts = [1_000_000]

    def next_ts():
        ts[0] += 1
        clock[0] = ts[0]  # device clock tracks the verifier: zero drift
        return ts[0]

    with ProverServer(service) as server:
        rng = random.Random(77)
        trusted = 0
        for _ in range(100):
            name = rng.choice(list(images))
            image = images[name]
            a = rng.randrange(len(image))
            b = rng.randrange(a, len(image))
            result = verifier_attest(server.address, suite, pids[name],
                                     a, b, image, timestamp=next_ts())
            trusted += result.verdict is Verdict.TRUSTED
        if trusted != 100:
            problems.append(f"only {trusted}/100 randomized runs TRUSTED")

        target = pids["target"]
        reference = images["target"]
        modified = 0
        for offset in range(4096):
            original = kernel.vspace_read(target, offset, 1)
            flipped = bytes([original[0] ^ rng.randrange(1, 256)])
            kernel.vspace_write(target, offset, flipped)
            result = verifier_attest(server.address, suite, target,
                                     0, 4095, reference, timestamp=next_ts())
            kernel.vspace_write(target, offset, original)
            modified += result.verdict is Verdict.MODIFIED
        if modified != 4096:
            problems.append(f"only {modified}/4096 single-byte mutations MODIFIED")
    service.shutdown()

    _report(2, "end-to-end attestation soundness", problems,
            time.perf_counter() - t0, budget_s=60.0)


def test_3_replay_and_forgery(tmp_path):
    problems = []
    t0 = time.perf_counter()

    manifest = demo_manifest(device="forgery-prover")
    clock = [2_000_000]
    kernel, service, pids = provision_device(
        manifest, tmp_path / "ts.bin", counter=lambda: clock[0])
    suite = manifest.suite()

    with ProverServer(service) as server:
        rng = random.Random(1001)
        answered = 0
        for _ in range(1000):
            forged = AttestRequest(2_000_001 + rng.randrange(10_000),
                                   pids["app0"], 0, 64,
                                   rng.randbytes(rng.choice((8, 16, 32))))
            if exchange(server.address, encode_request(forged), 2.0) is not None:
                answered += 1
        if answered:
            problems.append(f"{answered}/1000 forged requests got a response")

        request = make_request(suite, 2_050_000, pids["app0"], 0, 64)
        frame = encode_request(request)
        first = exchange(server.address, frame, 2.0)
        if first is None:
            problems.append("authentic request got no response")
        if exchange(server.address, frame, 2.0) is not None:
            problems.append("replayed request was answered")
    service.shutdown()

    _report(3, "forged and replayed requests rejected", problems,
            time.perf_counter() - t0)


def test_4_access_control_model_check():
    problems = []
    t0 = time.perf_counter()

    result = check_authority_confinement(max_depth=6, total_frames=8,
                                         user_count=2)
    if not result.ok:
        problems.append(f"{len(result.violations)} violations, first: "
                        f"{result.violations[0]}")
    if result.max_depth_reached != 6:
        problems.append(f"search stopped at depth {result.max_depth_reached}")
    if result.states < 100:
        problems.append(f"suspiciously small state space: {result.states}")

    _report(4, "capability confinement to depth 6", problems,
            time.perf_counter() - t0, budget_s=300.0)


def test_5_boot_chain_refusals():
    problems = []
    t0 = time.perf_counter()

    pair = SignatureKeyPair.generate()
    rom = FusedRom.for_keypair(pair)
    attest_blob = b"acceptance attestation payload" + bytes(200)
    image = pack_boot_image(DEFAULT_KERNEL_BLOB, attest_blob, pair)
    try:
        full_boot(rom, image)
    except BootRefused as refusal:
        problems.append(f"honest image refused: {refusal}")

    rng = random.Random(55)
    refused = 0
    for _ in range(1000):
        position = rng.randrange(len(image))
        corrupt = bytearray(image)
        corrupt[position] ^= rng.randrange(1, 256)
        try:
            full_boot(rom, bytes(corrupt))
        except BootRefused:
            refused += 1
    if refused != 1000:
        problems.append(f"only {refused}/1000 corrupted images refused")

    _report(5, "boot chain refuses corrupted images", problems,
            time.perf_counter() - t0, budget_s=10.0)


def test_6_scaling_linearity_and_breakdown():
    # The phase shares on the reference embedded board were 84.89% MAC,
    # 15.11% retrieve, <0.01% verify; only the ordering is asserted here
    # since the split is hardware specific.
    problems = []
    t0 = time.perf_counter()

    rows, fits = bench_mac_vs_memsize()
    for algorithm, fit in fits.items():
        if fit.r2 < 0.99:
            problems.append(f"{algorithm.value}: R^2 {fit.r2:.5f} < 0.99")
    if len(fits) != 5:
        problems.append(f"expected 5 algorithms, saw {len(fits)}")

    medians = breakdown_medians(bench_breakdown(sizes=(MIB,)), MIB)
    if not (medians["mac_mem"] > medians["retrieve_mem"]
            > medians["verify_request"]):
        problems.append(f"phase ordering at 1 MiB wrong: {medians}")

    _report(6, "MAC time linear in size, phases ordered", problems,
            time.perf_counter() - t0)


def test_7_speck_headline_throughput():
    problems = []
    t0 = time.perf_counter()

    ns = speck_headline_ns()
    if ns >= 500_000_000:
        problems.append(f"10 MB Speck MAC took {ns / 1e6:.1f} ms, not < 500 ms")

    _report(7, "10 MB Speck MAC under 500 ms", problems,
            time.perf_counter() - t0)


def test_8_adversary_suite():
    problems = []
    t0 = time.perf_counter()

    results = advsim.run_all(seed=11)
    for result in results:
        if not result.passed:
            problems.append(f"scenario {result.name} failed honestly")
    if len(results) != 7:
        problems.append(f"expected 7 scenarios, ran {len(results)}")
    for name, switch in advsim.SCENARIO_DISABLES.items():
        if advsim.run_scenario(name, seed=11, disable=switch).passed:
            problems.append(f"{name} still passes with {switch} disabled")

    _report(8, "adversary scenarios pass and validate", problems,
            time.perf_counter() - t0)
