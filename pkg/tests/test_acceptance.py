import pytest

from experiments.acceptance import CHECKS, run_acceptance

CHEAP = ["combinatorics", "bijections", "first order", "xxz mapping", "asymmetric drive"]
PHYSICS = ["second order", "level statistics", "entanglement", "dynamics", "third charge", "spectral form factor"]


class TestAcceptance:

    def test_every_check_is_registered(self):
        assert sorted(CHECKS) == sorted(CHEAP + PHYSICS)

    @pytest.mark.parametrize("name", CHEAP)
    def test_cheap_checks_pass(self, name):
        (result,) = run_acceptance("fast", [name])
        assert result.name == name
        assert result.passed, result.detail
        assert result.seconds >= 0.0

    def test_failures_are_reported(self, monkeypatch):
        def broken(level):
            raise AssertionError("deliberately broken")

        monkeypatch.setitem(CHECKS, "combinatorics", broken)
        (result,) = run_acceptance("fast", ["combinatorics"])
        assert not result.passed
        assert result.detail == "deliberately broken"

    @pytest.mark.slow
    @pytest.mark.parametrize("name", PHYSICS)
    def test_physics_checks_fast_level(self, name):
        (result,) = run_acceptance("fast", [name])
        assert result.passed, result.detail

    @pytest.mark.slow
    def test_full_level(self):
        failed = [r for r in run_acceptance("full") if not r.passed]
        assert not failed, [(r.name, r.detail) for r in failed]
