from math import comb

import numpy as np
import pytest

from core.basis import (
    Boundary,
    FockState,
    UpPositions,
    constrained_sector_basis,
    cyclic_deletion_map,
    enumerate_basis,
    enumerate_sector_N,
    fibonacci,
    fixed_n_basis,
    hard_rod_map,
    hard_rod_unmap,
    is_constrained,
    lucas,
    popcount,
    spin_basis,
)
from core.errors import BasisError


class TestConstrainedBasis:

    def test_small_dimensions(self):
        assert enumerate_basis(6, Boundary.PBC).dim == 18
        assert enumerate_basis(6, Boundary.OBC).dim == 21
        assert constrained_sector_basis(6, 2, Boundary.OBC).dim == 10

    @pytest.mark.parametrize("L", range(2, 13))
    def test_matches_brute_force(self, L):
        for bc in (Boundary.OBC, Boundary.PBC):
            brute = [w for w in range(1 << L) if is_constrained(w, L, bc)]
            basis = enumerate_basis(L, bc)
            assert np.array_equal(basis.states, brute)
        assert enumerate_basis(L, Boundary.OBC).dim == fibonacci(L + 2)
        assert enumerate_basis(L, Boundary.PBC).dim == lucas(L)

    def test_sector_counts(self):
        for L in range(2, 13):
            for N in range(0, (L + 1) // 2 + 1):
                assert constrained_sector_basis(L, N, Boundary.OBC).dim == comb(L - N + 1, N)

    def test_sector_enumeration_agrees(self):
        for bc in (Boundary.OBC, Boundary.PBC):
            for N in range(0, 5):
                listed = [s.bits for s in enumerate_sector_N(8, N, bc)]
                assert listed == constrained_sector_basis(8, N, bc).states.tolist()

    def test_index_and_find(self):
        basis = enumerate_basis(6, "pbc")
        for i, state in enumerate(basis):
            assert basis.index(state.bits) == i
        assert basis.find(np.array([3, 0]))[0] == -1
        with pytest.raises(BasisError):
            basis.index(3)

    def test_tag_names_the_basis(self):
        assert enumerate_basis(6, "pbc").tag == "pxp:pbc:L=6:N=all"
        assert constrained_sector_basis(6, 2, "obc").tag == "pxp:obc:L=6:N=2"
        assert fixed_n_basis(5, 2, "pbc").tag == "free:pbc:L=5:N=2"

    def test_popcount(self):
        words = np.array([0, 1, 5, 0b10101010101, (1 << 31) - 1])
        assert popcount(words).tolist() == [0, 1, 2, 6, 31]

    def test_out_of_range(self):
        with pytest.raises(BasisError):
            enumerate_basis(1, Boundary.OBC)
        with pytest.raises(BasisError):
            constrained_sector_basis(6, 4, Boundary.OBC)
        with pytest.raises(BasisError):
            Boundary.parse("twisted")

    def test_unconstrained_bases(self):
        assert fixed_n_basis(5, 2, Boundary.PBC).dim == 10
        assert spin_basis(4, Boundary.PBC).dim == 16


class TestFockState:

    def test_from_string(self):
        assert FockState.from_string("↓↑↓").bits == 2
        assert str(FockState.from_string("0101")) == "0101"
        assert FockState.from_string("101000").n_up == 2

    def test_cyclic_constraint(self):
        assert FockState.from_string("100001").is_constrained(Boundary.OBC)
        assert not FockState.from_string("100001").is_constrained(Boundary.PBC)


class TestHardRodMap:

    def test_example(self):
        mapped = hard_rod_map(UpPositions((1, 3, 6), 7))
        assert mapped.xs == (1, 2, 4)
        assert mapped.L == 5

    def test_round_trip(self):
        for L in range(2, 11):
            for state in enumerate_basis(L, Boundary.OBC):
                xs = UpPositions.from_state(state)
                assert hard_rod_unmap(hard_rod_map(xs)) == xs
                assert xs.to_state() == state

    def test_rejects_adjacent_ups(self):
        with pytest.raises(BasisError):
            hard_rod_map(UpPositions((1, 2), 4))
        with pytest.raises(BasisError):
            hard_rod_unmap(UpPositions((2, 2), 4))


class TestCyclicDeletion:

    def test_bulk_example(self):
        image = cyclic_deletion_map(FockState.from_string("101000"))
        assert image == FockState(0b11, 4)

    def test_neel_goes_to_all_up(self):
        image = cyclic_deletion_map(FockState.from_string("010101"))
        assert image == FockState(0b111, 3)

    def test_length_and_filling(self):
        for state in enumerate_basis(9, Boundary.PBC):
            image = cyclic_deletion_map(state)
            assert image.L == state.L - state.n_up
            assert image.n_up == state.n_up

    def test_rejects_wrapped_pair(self):
        with pytest.raises(BasisError):
            cyclic_deletion_map(FockState.from_string("100001"))
