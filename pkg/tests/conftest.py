import dataclasses

import pytest
from hypothesis import HealthCheck, settings

from hydra_ra import manifest as mf
from hydra_ra.crypto import MacAlgorithm

# JIT warm-up can land inside the first example; deadlines are meaningless
# with that in the mix.
settings.register_profile(
    "ci", deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture
def device(tmp_path):
    """Fresh 3-process Speck device with a controllable clock.

    The returned clock list holds the current time in ms; tests advance it by
    assignment. Timestamps start high enough that request times near zero
    read as stale.
    """
    clock = [1_000_000]
    manifest = mf.demo_manifest()
    kernel, service, pids = mf.provision_device(
        manifest, tmp_path / "ts.bin", counter=lambda: clock[0])
    yield kernel, service, pids, manifest, clock
    service.shutdown()


def make_device(tmp_path, algorithm=MacAlgorithm.SPECK_64_128_CBC,
                processes=None, frames=64, counter=None, store_name="ts.bin"):
    manifest = mf.demo_manifest(algorithm=algorithm)
    if processes is not None:
        manifest = dataclasses.replace(manifest, processes=tuple(processes))
    if frames != manifest.frames:
        manifest = dataclasses.replace(manifest, frames=frames)
    return mf.provision_device(manifest, tmp_path / store_name,
                               counter=counter), manifest
