"""Command-line front ends.

Five entry points: `hydra-pack` builds and signs boot images, `hydra-prover`
boots a simulated device and serves attestation requests over TCP,
`hydra-verify` challenges a prover and appraises the answer, `hydra-bench`
runs the measurement harnesses, and `hydra-attack` runs adversary scenarios.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from . import advsim as advsim_mod
from . import bench as bench_mod
from .attest import TimestampStore, pack_attest_image
from .boot import DEFAULT_KERNEL_BLOB, FusedRom, full_boot, pack_boot_image
from .crypto import MacSuite, SignatureKeyPair, sha256
from .manifest import ALG_BY_NAME, load_manifest
from .proto import ProverServer, Verdict, VerifierClock, verifier_attest


def _read_key_file(path: str) -> bytes:
    text = Path(path).read_text().strip()
    try:
        return bytes.fromhex(text)
    except ValueError as exc:
        raise click.UsageError(f"{path}: not hex text ({exc})") from exc


def _parse_host_port(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise click.UsageError(f"expected HOST:PORT, got {value!r}")
    return host, int(port)


def _parse_range(value: str) -> tuple[int, int]:
    first, sep, last = value.partition(":")
    try:
        a, b = int(first), int(last)
    except ValueError as exc:
        raise click.UsageError(f"expected A:B, got {value!r}") from exc
    if not sep or b < a or a < 0:
        raise click.UsageError(f"range must satisfy 0 <= A <= B, got {value!r}")
    return a, b


# -- hydra-pack --------------------------------------------------------------

@click.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              help="Device manifest (JSON).")
@click.option("--key-file", "key_path", type=click.Path(),
              help="Signing key file, hex text (32-byte seed).")
@click.option("--out", "out_path", type=click.Path(),
              help="Where to write the packed boot image.")
@click.option("--kernel-file", type=click.Path(exists=True), default=None,
              help="Raw kernel blob; a built-in placeholder is used if omitted.")
@click.option("--keygen", is_flag=True,
              help="Generate a signing key into --key-file and exit.")
def pack(manifest_path, key_path, out_path, kernel_file, keygen):
    """Build and sign a boot image from a device manifest."""
    if keygen:
        if not key_path:
            raise click.UsageError("--keygen needs --key-file")
        pair = SignatureKeyPair.generate()
        Path(key_path).write_text(pair.private_key.hex() + "\n")
        click.echo(f"wrote signing key to {key_path}")
        click.echo(f"public key: {pair.public_key.hex()}")
        click.echo(f"rom pk digest: {sha256(pair.public_key).hex()}")
        return
    if not (manifest_path and key_path and out_path):
        raise click.UsageError("need --manifest, --key-file and --out "
                               "(or --keygen)")
    manifest = load_manifest(manifest_path)
    pair = SignatureKeyPair.from_private_bytes(_read_key_file(key_path))
    kernel_blob = (Path(kernel_file).read_bytes() if kernel_file
                   else DEFAULT_KERNEL_BLOB)
    attest_blob = pack_attest_image(manifest.algorithm, manifest.master_key,
                                    manifest.auth_key, manifest.tag_length)
    image = pack_boot_image(kernel_blob, attest_blob, pair)
    Path(out_path).write_bytes(image)
    click.echo(f"packed {len(image)} bytes -> {out_path}")
    click.echo(f"rom pk digest: {sha256(pair.public_key).hex()}")


# -- hydra-prover ------------------------------------------------------------

@click.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              required=True, help="Device manifest (JSON).")
@click.option("--listen", default="127.0.0.1:9400", show_default=True,
              help="HOST:PORT to listen on.")
@click.option("--store", "store_path", type=click.Path(), default=None,
              help="Timestamp persistence file "
                   "[default: <manifest>.ts next to the manifest].")
@click.option("--image", "image_path", type=click.Path(exists=True),
              default=None,
              help="Packed boot image to boot instead of an ephemeral "
                   "honest pack; needs --rom-digest.")
@click.option("--rom-digest", default=None,
              help="Hex digest fused into the ROM (printed by hydra-pack).")
def prover(manifest_path, listen, store_path, image_path, rom_digest):
    """Boot a simulated device and answer attestation requests."""
    from .manifest import provision_device

    host, port = _parse_host_port(listen)
    manifest = load_manifest(manifest_path)
    if store_path is None:
        store_path = str(Path(manifest_path).with_suffix(".ts"))
    if image_path is not None:
        if rom_digest is None:
            raise click.UsageError("--image needs --rom-digest")
        from .attest import AttestConfig, AttestService

        rom = FusedRom(bytes.fromhex(rom_digest))
        kernel = full_boot(rom, Path(image_path).read_bytes(), manifest.frames)
        service = AttestService(
            kernel, TimestampStore(store_path), None,
            AttestConfig(manifest.freshness_window_ms,
                         manifest.persist_interval_ms))
        service.spawn_user_processes(list(manifest.processes))
    else:
        _, service, _ = provision_device(manifest, store_path)
    server = ProverServer(service, host, port).start()
    click.echo(f"device {manifest.device!r} listening on "
               f"{server.address[0]}:{server.address[1]}")
    for name, pid in sorted(service.user_pids.items(), key=lambda kv: kv[1]):
        click.echo(f"  pid {pid}: {name}")
    try:
        while True:
            import time as _time

            _time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        service.shutdown()


# -- hydra-verify ------------------------------------------------------------

@click.command()
@click.option("--target", required=True, help="Prover HOST:PORT.")
@click.option("--proc", "pid", type=int, required=True,
              help="Target process id on the device.")
@click.option("--range", "byte_range", required=True,
              help="Inclusive byte range A:B of the target image.")
@click.option("--expected", type=click.Path(exists=True), required=True,
              help="File holding the expected image of the target process.")
@click.option("--key-file", "key_path", type=click.Path(exists=True),
              required=True, help="Attestation key, hex text.")
@click.option("--algorithm", type=click.Choice(sorted(ALG_BY_NAME)),
              default="speck-64-128-cbc", show_default=True)
@click.option("--auth-key-file", type=click.Path(exists=True), default=None,
              help="Request-auth key; derived from the master key if omitted.")
@click.option("--tag-length", type=int, default=None,
              help="Report tag length in bytes (algorithm default if omitted).")
@click.option("--timeout", type=float, default=5.0, show_default=True,
              help="Response timeout in seconds.")
def verify(target, pid, byte_range, expected, key_path, algorithm,
           auth_key_file, tag_length, timeout):
    """Challenge a prover; exit 0 only on a TRUSTED verdict."""
    address = _parse_host_port(target)
    start, end = _parse_range(byte_range)
    master = _read_key_file(key_path)
    auth = _read_key_file(auth_key_file) if auth_key_file else None
    suite = MacSuite.build(ALG_BY_NAME[algorithm], master, auth, tag_length)
    image = Path(expected).read_bytes()
    result = verifier_attest(address, suite, pid, start, end, image,
                             clock=VerifierClock(), timeout=timeout)
    if result.verdict is Verdict.ERROR:
        click.echo(f"ERROR({result.error_code.name})")
    else:
        click.echo(result.verdict.name)
    if result.round_trip_ns:
        click.echo(f"round trip: {result.round_trip_ns / 1e6:.2f} ms")
    sys.exit(result.exit_code)


# -- hydra-bench -------------------------------------------------------------

def _emit(rows, out, as_json):
    text = (bench_mod.rows_to_json(rows) if as_json
            else bench_mod.rows_to_csv(rows))
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {len(rows)} rows -> {out}", err=True)
    else:
        click.echo(text, nl=False)


out_option = click.option("--out", type=click.Path(), default=None,
                          help="Output file [default: stdout].")
json_option = click.option("--json", "as_json", is_flag=True,
                           help="Emit JSON instead of CSV.")


@click.group()
def bench():
    """Performance harness; emits algorithm,size_bytes,processes,metric,value_ns."""


@bench.command()
@click.option("--size", "sizes", type=int, multiple=True,
              default=(1 << 20,), show_default=True, help="Input size(s).")
@click.option("--repetitions", type=int, default=30, show_default=True)
@out_option
@json_option
def algorithms(sizes, repetitions, out, as_json):
    """Median one-shot MAC time for each algorithm."""
    _emit(bench_mod.bench_mac_algorithms(sizes, repetitions=repetitions),
          out, as_json)


@bench.command()
@click.option("--repetitions", type=int, default=9, show_default=True)
@out_option
@json_option
def memsize(repetitions, out, as_json):
    """MAC time vs size, 1-10 MiB, with linear fits."""
    rows, _ = bench_mod.bench_mac_vs_memsize(repetitions=repetitions)
    _emit(rows, out, as_json)


@bench.command()
@click.option("--repetitions", type=int, default=5, show_default=True)
@out_option
@json_option
def processes(repetitions, out, as_json):
    """Whole-device attestation sweep vs process count."""
    rows, _ = bench_mod.bench_mac_vs_processes(repetitions=repetitions)
    _emit(rows, out, as_json)


@bench.command()
@out_option
@json_option
def breakdown(out, as_json):
    """Per-phase timing of one attestation at 1 MiB and 10 KiB."""
    _emit(bench_mod.bench_breakdown(), out, as_json)


@bench.command()
@out_option
@json_option
def headline(out, as_json):
    """Speck MAC over 10 MB, the headline latency figure."""
    ns = bench_mod.speck_headline_ns()
    row = bench_mod.BenchRow("speck-64-128-cbc", 10_000_000, 0,
                             "mac_ns", ns)
    _emit([row], out, as_json)
    click.echo(f"speck 10 MB: {ns / 1e6:.1f} ms", err=True)


# -- hydra-attack ------------------------------------------------------------

@click.command()
@click.option("--scenario", "name",
              type=click.Choice(sorted(advsim_mod.SCENARIO_DISABLES) + ["all"]),
              default="all", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--transcript", "show_transcript", is_flag=True,
              help="Print the full transcript even on pass.")
def attack(name, seed, show_transcript):
    """Run adversary scenarios; exit 0 only if every property held."""
    if name == "all":
        results = advsim_mod.run_all(seed=seed)
    else:
        results = [advsim_mod.run_scenario(name, seed=seed)]
    failed = False
    for result in results:
        click.echo(f"{result.name}: {'PASS' if result.passed else 'FAIL'}")
        if show_transcript or not result.passed:
            for line in result.transcript:
                click.echo(f"  {line}")
        failed |= not result.passed
    sys.exit(1 if failed else 0)
