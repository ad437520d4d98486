"""Adversary scenarios must pass honestly and fail once their guard is off."""

import pytest

from hydra_ra import advsim
from hydra_ra.advsim import SCENARIO_DISABLES, SCENARIO_NAMES, run_all, run_scenario


class TestHonestRuns:
    def test_all_scenarios_pass(self):
        results = run_all(seed=7)
        assert [r.name for r in results] == list(SCENARIO_NAMES)
        assert all(r.passed for r in results), [
            r.name for r in results if not r.passed]

    @pytest.mark.parametrize("name", SCENARIO_NAMES)
    def test_each_scenario_individually(self, name):
        result = run_scenario(name, seed=3)
        assert result.passed, "\n".join(result.transcript)

    def test_other_seed_still_passes(self):
        results = run_all(seed=12345)
        assert all(r.passed for r in results)


class TestDisabledProtections:
    """Each scenario must detect exactly the hole its disable switch opens.

    If a scenario kept passing with its protection off, the scenario
    would not actually be exercising that protection.
    """

    @pytest.mark.parametrize("name", SCENARIO_NAMES)
    def test_scenario_fails_without_its_guard(self, name):
        result = run_scenario(name, seed=3, disable=SCENARIO_DISABLES[name])
        assert not result.passed, "\n".join(result.transcript)
        assert any(line.startswith("FAIL:") for line in result.transcript)

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ValueError):
            run_scenario("no_such_scenario")


class TestKeyStealFixture:
    def test_misgrant_fixture_is_caught(self):
        # A deliberately over-granted capability must trip the audit even
        # with every protection left on.
        result = run_scenario("key_steal", seed=3, misgrant_fixture=True)
        assert not result.passed
        assert any("FAIL" in line for line in result.transcript)


class TestTranscripts:
    def test_same_seed_same_transcript(self):
        first = run_scenario("malware_infection", seed=99)
        second = run_scenario("malware_infection", seed=99)
        assert first.transcript == second.transcript

    def test_transcript_records_verdicts(self):
        result = run_scenario("forge_request", seed=1)
        assert result.transcript[0].startswith("scenario forge_request")
        assert result.transcript[-1] == "PASS"
        assert len(result.transcript) > 2

    def test_registry_covers_seven_attacks(self):
        assert len(SCENARIO_NAMES) == 7
        assert set(SCENARIO_DISABLES.values()) == {
            "request_auth", "freshness", "cached_image", "capability_checks",
            "priority_raise", "signature_check"}


def test_run_all_is_order_stable():
    assert [r.name for r in advsim.run_all(seed=0)] == list(SCENARIO_NAMES)
