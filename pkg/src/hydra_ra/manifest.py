"""Device manifest: JSON description of one prover.

A manifest names the MAC algorithm, the keys, freshness parameters, the
frame budget, and the user processes to start. Process ids are assigned
in listing order starting at 2; the attestation service is always pid 1.

Key fields are hex strings. `auth_key_hex` may be null, in which case the
request-auth key is derived from the master key. Process images are given
inline (`image_hex`) or as a file path relative to the manifest
(`image_file`).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import boot
from .attest import (AttestConfig, AttestService, TimestampStore,
                     UserProcessSpec, pack_attest_image)
from .crypto import MacAlgorithm, MacSuite

ALG_BY_NAME = {
    "speck-64-128-cbc": MacAlgorithm.SPECK_64_128_CBC,
    "simon-64-128-cbc": MacAlgorithm.SIMON_64_128_CBC,
    "aes-128-cbc": MacAlgorithm.AES_128_CBC,
    "hmac-sha256": MacAlgorithm.HMAC_SHA_256,
    "blake2s": MacAlgorithm.BLAKE2S_KEYED,
}
NAME_BY_ALG = {v: k for k, v in ALG_BY_NAME.items()}


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceManifest:
    device: str
    algorithm: MacAlgorithm
    master_key: bytes
    auth_key: Optional[bytes]
    tag_length: Optional[int]
    freshness_window_ms: int
    persist_interval_ms: int
    frames: int
    processes: tuple[UserProcessSpec, ...]

    def suite(self) -> MacSuite:
        return MacSuite.build(self.algorithm, self.master_key,
                              self.auth_key, self.tag_length)

    def to_dict(self) -> dict:
        return {
            "device": self.device,
            "mac_algorithm": NAME_BY_ALG[self.algorithm],
            "attestation_key_hex": self.master_key.hex(),
            "auth_key_hex": self.auth_key.hex() if self.auth_key else None,
            "tag_length": self.tag_length,
            "freshness_window_ms": self.freshness_window_ms,
            "persist_interval_ms": self.persist_interval_ms,
            "frames": self.frames,
            "processes": [
                {"name": p.name, "image_hex": p.image.hex(),
                 "priority": p.priority}
                for p in self.processes
            ],
        }


def parse_manifest(data: dict, base_dir: Path | None = None) -> DeviceManifest:
    try:
        alg_name = data["mac_algorithm"]
        if alg_name not in ALG_BY_NAME:
            raise ManifestError(f"unknown mac_algorithm {alg_name!r}, "
                                f"expected one of {sorted(ALG_BY_NAME)}")
        algorithm = ALG_BY_NAME[alg_name]
        master_key = bytes.fromhex(data["attestation_key_hex"])
        auth_hex = data.get("auth_key_hex")
        auth_key = bytes.fromhex(auth_hex) if auth_hex else None
        processes = []
        for entry in data.get("processes", []):
            if "image_hex" in entry:
                image = bytes.fromhex(entry["image_hex"])
            elif "image_file" in entry:
                path = Path(entry["image_file"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                image = path.read_bytes()
            else:
                raise ManifestError(
                    f"process {entry.get('name')!r} needs image_hex or image_file")
            processes.append(UserProcessSpec(
                name=entry["name"], image=image,
                priority=int(entry.get("priority", 100))))
        return DeviceManifest(
            device=data.get("device", "prover"),
            algorithm=algorithm,
            master_key=master_key,
            auth_key=auth_key,
            tag_length=data.get("tag_length"),
            freshness_window_ms=int(
                data.get("freshness_window_ms", AttestConfig.freshness_window_ms)),
            persist_interval_ms=int(
                data.get("persist_interval_ms", AttestConfig.persist_interval_ms)),
            frames=int(data.get("frames", 64)),
            processes=tuple(processes),
        )
    except ManifestError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ManifestError(str(exc)) from exc


def load_manifest(path: str | Path) -> DeviceManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    return parse_manifest(data, base_dir=path.parent)


def save_manifest(manifest: DeviceManifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")


def stream_bytes(seed: str, length: int) -> bytes:
    """Deterministic filler with no structure worth compressing."""
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(f"{seed}:{counter}".encode()).digest()
        counter += 1
    return bytes(out[:length])


# Filler standing in for the measurement loop; makes the attestation binary
# span more than one frame so the exclusivity rules cover a realistic image.
DEFAULT_SERVICE_CODE = stream_bytes("attest-service-code", 6000)


def demo_manifest(algorithm: MacAlgorithm = MacAlgorithm.SPECK_64_128_CBC,
                  device: str = "demo-prover",
                  process_count: int = 3) -> DeviceManifest:
    """A self-contained manifest with deterministic keys and images."""
    master_key = stream_bytes(f"{device}-master", algorithm.key_size)
    processes = tuple(
        UserProcessSpec(name=f"app{i}",
                        image=stream_bytes(f"{device}-app{i}", 4096 * (1 + i % 2)),
                        priority=100 - i)
        for i in range(process_count))
    return DeviceManifest(
        device=device, algorithm=algorithm, master_key=master_key,
        auth_key=None, tag_length=None,
        freshness_window_ms=AttestConfig.freshness_window_ms,
        persist_interval_ms=AttestConfig.persist_interval_ms,
        frames=64, processes=processes)


def provision_device(manifest: DeviceManifest, store_path: str | Path,
                     counter: Callable[[], int] | None = None,
                     ) -> tuple["boot.platform.Kernel", AttestService, dict[str, int]]:
    """Boot a device per manifest: honest chain, service, user processes."""
    blob = pack_attest_image(manifest.algorithm, manifest.master_key,
                             manifest.auth_key, manifest.tag_length,
                             code=DEFAULT_SERVICE_CODE)
    kernel = boot.build_platform(blob, manifest.frames)
    service = AttestService(
        kernel, TimestampStore(store_path), counter,
        AttestConfig(manifest.freshness_window_ms, manifest.persist_interval_ms))
    pids = service.spawn_user_processes(list(manifest.processes))
    return kernel, service, pids
