"""Manifest parsing, serialization, and device provisioning."""
import json

import pytest

from hydra_ra.crypto import MacAlgorithm
from hydra_ra.manifest import (ManifestError, demo_manifest, load_manifest,
                               parse_manifest, provision_device, save_manifest,
                               stream_bytes)


class TestParsing:
    def test_round_trip_through_disk(self, tmp_path):
        manifest = demo_manifest()
        path = tmp_path / "device.json"
        save_manifest(manifest, path)
        loaded = load_manifest(path)
        assert loaded == manifest

    def test_image_file_resolved_relative_to_manifest(self, tmp_path):
        (tmp_path / "code.bin").write_bytes(b"process code")
        data = demo_manifest().to_dict()
        data["processes"] = [
            {"name": "filed", "image_file": "code.bin", "priority": 50}]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(data))
        loaded = load_manifest(path)
        assert loaded.processes[0].image == b"process code"
        assert loaded.processes[0].priority == 50

    def test_unknown_algorithm_rejected(self):
        data = demo_manifest().to_dict()
        data["mac_algorithm"] = "rot13"
        with pytest.raises(ManifestError):
            parse_manifest(data)

    def test_process_without_image_rejected(self):
        data = demo_manifest().to_dict()
        data["processes"] = [{"name": "ghost", "priority": 10}]
        with pytest.raises(ManifestError):
            parse_manifest(data)

    def test_bad_key_hex_rejected(self):
        data = demo_manifest().to_dict()
        data["attestation_key_hex"] = "zz"
        with pytest.raises(ManifestError):
            parse_manifest(data)


class TestStreamBytes:
    def test_deterministic_and_length_exact(self):
        assert stream_bytes("seed", 100) == stream_bytes("seed", 100)
        assert len(stream_bytes("seed", 100)) == 100
        assert stream_bytes("seed", 100) != stream_bytes("other", 100)
        assert stream_bytes("seed", 50) == stream_bytes("seed", 100)[:50]


class TestProvisioning:
    def test_pids_assigned_in_listing_order_from_2(self, tmp_path):
        kernel, service, pids = provision_device(
            demo_manifest(), tmp_path / "ts.bin", counter=lambda: 0)
        assert pids == {"app0": 2, "app1": 3, "app2": 4}
        assert service.pid == 1
        service.shutdown()

    def test_images_and_priorities_as_declared(self, tmp_path):
        manifest = demo_manifest()
        kernel, service, pids = provision_device(
            manifest, tmp_path / "ts.bin", counter=lambda: 0)
        for spec in manifest.processes:
            proc = kernel.processes[pids[spec.name]]
            assert proc.tcb.priority == spec.priority
            assert kernel.vspace_read(proc.pid, 0, len(spec.image)) == spec.image
        service.shutdown()

    def test_service_algorithm_follows_manifest(self, tmp_path):
        manifest = demo_manifest(algorithm=MacAlgorithm.BLAKE2S_KEYED)
        kernel, service, pids = provision_device(
            manifest, tmp_path / "ts.bin", counter=lambda: 0)
        assert service.suite.algorithm is MacAlgorithm.BLAKE2S_KEYED
        assert service.suite.master_key == manifest.master_key
        service.shutdown()
