import numpy as np
import pytest

from analysis.xxzmap import (
    flippable_count,
    flippable_count_left,
    obc_constant,
    orbit_hop_element,
    sector_state_norm_check,
    verify_obc,
    verify_pbc_k0,
)
from core.basis import Boundary, FockState
from core.errors import BasisError


class TestFlippableCount:

    def test_wrapped_hop(self):
        state = FockState.from_string("000101")
        assert flippable_count(state) == 1
        assert flippable_count_left(state) == 1

    def test_open_chain_edge(self):
        state = FockState.from_string("000001")
        assert flippable_count(state, Boundary.OBC) == 0
        assert flippable_count(state, Boundary.PBC) == 1

    def test_rejects_violating_state(self):
        with pytest.raises(BasisError):
            flippable_count(FockState.from_string("0110"))


class TestOrbitHopping:

    def test_period_weighted_element(self):
        # two hops reach the period-3 orbit, which has twice the weight
        a = FockState.from_string("101000")
        b = FockState.from_string("100100")
        assert orbit_hop_element(a, b) == pytest.approx(2 * np.sqrt(2))
        assert orbit_hop_element(b, a) == pytest.approx(4 / np.sqrt(2))

    def test_unreachable_orbit(self):
        a = FockState.from_string("100000")
        b = FockState.from_string("101000")
        assert orbit_hop_element(a, b, coefficient=3.0) == 0.0


class TestPeriodicMapping:

    @pytest.mark.parametrize("L, N", [(8, 2), (8, 3), (10, 2), (10, 4), (11, 3)])
    def test_k0_blocks_agree(self, L, N):
        report = verify_pbc_k0(L, N, J=1.0)
        assert report.passed, report.as_record()
        assert report.dim > 0

    def test_scales_with_coupling(self):
        small = verify_pbc_k0(9, 3, J=0.5)
        assert small.passed
        assert small.constant == pytest.approx(verify_pbc_k0(9, 3, J=1.0).constant / 2)

    def test_record(self):
        record = verify_pbc_k0(8, 2, J=1.0).as_record()
        assert record["bc"] == "pbc"
        assert record["pass"] is True

    def test_filling_range(self):
        with pytest.raises(BasisError):
            verify_pbc_k0(8, 4, J=1.0)
        with pytest.raises(BasisError):
            verify_pbc_k0(8, 0, J=1.0)
        with pytest.raises(BasisError):
            verify_pbc_k0(22, 3, J=1.0)


class TestOpenMapping:

    def test_constant(self):
        assert obc_constant(6, 2, 1.0) == pytest.approx(0.5)
        assert obc_constant(6, 2, 2.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("L", [6, 7, 9])
    def test_all_fillings(self, L):
        for N in range(1, (L + 1) // 2 + 1):
            report = verify_obc(L, N, J=1.0)
            assert report.passed, report.as_record()
            assert report.constant == pytest.approx(obc_constant(L, N, 1.0))


class TestSectorNormCheck:

    @pytest.mark.parametrize("L", [6, 10, 12])
    def test_block_structure(self, L):
        report = sector_state_norm_check(L)
        assert report.passed, report.failures
        assert report.orbits_checked > 0
