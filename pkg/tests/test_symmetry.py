import numpy as np
import pytest
from scipy import linalg

from core.basis import Boundary, enumerate_basis, lucas
from core.errors import BasisMismatchError, SymmetryError
from core.hamiltonians import LocalTerm, op_hf2_kernel, op_sigma_x_tilde, op_sigma_z_total, operator_matrix
from core.symmetry import (
    build_orbits,
    build_sector_basis,
    expand_to_full,
    project_operator,
    project_to_sector,
    reflect,
    representatives,
    sector_dimensions,
    translate,
)


class TestWordSymmetries:

    def test_translate(self):
        assert translate(np.array([1]), 4, 1)[0] == 2
        assert translate(np.array([8]), 4, 1)[0] == 1
        assert translate(np.array([5]), 4, 4)[0] == 5

    def test_reflect(self):
        assert reflect(np.array([1]), 4)[0] == 8
        assert reflect(np.array([0b0011]), 4)[0] == 0b1100

    def test_representatives(self):
        assert representatives(np.array([4, 8, 2]), 4).tolist() == [1, 1, 1]


class TestOrbits:

    def test_l6_orbits(self):
        orbits = build_orbits(enumerate_basis(6, Boundary.PBC))
        periods = sorted(o.R for o in orbits)
        # vacuum, one up-spin, two at distance 2, two at distance 3, Neel
        assert periods == [1, 2, 3, 6, 6]
        assert sum(o.R for o in orbits) == 18

    def test_obc_has_no_orbits(self):
        with pytest.raises(SymmetryError):
            build_orbits(enumerate_basis(6, Boundary.OBC))


class TestSectorBasis:

    def setup_method(self):
        self.basis = enumerate_basis(10, Boundary.PBC)

    @pytest.mark.parametrize("L", range(3, 13))
    def test_dimensions_sum_to_lucas(self, L):
        dims = sector_dimensions(enumerate_basis(L, Boundary.PBC))
        assert sum(dims.values()) == lucas(L)

    @pytest.mark.parametrize("k, P", [(0, 1), (0, -1), (5, 1), (3, None), (0, None)])
    def test_isometry_is_orthonormal(self, k, P):
        sector = build_sector_basis(self.basis, k, P)
        V = sector.isometry()
        assert np.allclose(V.conj().T @ V, np.eye(sector.dim))

    @pytest.mark.parametrize("k, P", [(0, 1), (0, -1), (2, None), (5, -1)])
    def test_direct_assembly_matches_projection(self, k, P):
        sector = build_sector_basis(self.basis, k, P)
        for build in (op_sigma_x_tilde, op_sigma_z_total, op_hf2_kernel):
            direct = build(sector)
            projected = project_operator(build(self.basis), sector)
            assert np.allclose(direct.entries, projected.entries, atol=1e-12)
            assert direct.basis_tag == sector.tag

    def test_sector_spectra_cover_full_spectrum(self):
        basis = enumerate_basis(8, Boundary.PBC)
        full = linalg.eigvalsh(op_sigma_x_tilde(basis).entries)
        parts = []
        for (k, P) in sector_dimensions(basis):
            sector = build_sector_basis(basis, k, P)
            if sector.dim:
                parts.append(linalg.eigvalsh(op_sigma_x_tilde(sector).entries))
        assert np.allclose(np.sort(np.concatenate(parts)), full, atol=1e-10)

    def test_expand_and_project(self, rng):
        sector = build_sector_basis(self.basis, 0, 1)
        v = rng.normal(size=sector.dim) + 1j * rng.normal(size=sector.dim)
        psi = expand_to_full(v, sector)
        assert np.linalg.norm(psi) == pytest.approx(np.linalg.norm(v))
        assert np.allclose(project_to_sector(psi, sector), v)

    def test_parity_needs_k0_or_pi(self):
        with pytest.raises(SymmetryError):
            build_sector_basis(enumerate_basis(6, Boundary.PBC), k=1, P=1)
        with pytest.raises(SymmetryError):
            build_sector_basis(enumerate_basis(6, Boundary.PBC), k=0, P=2)

    def test_projection_rejects_broken_translation(self):
        sector = build_sector_basis(self.basis, 0, 1)
        local = operator_matrix([LocalTerm(1.0, ((0, "z"),), sites=(0,))], self.basis)
        with pytest.raises(SymmetryError):
            project_operator(local, sector)

    def test_projection_rejects_foreign_basis(self):
        sector = build_sector_basis(self.basis, 0, 1)
        other = op_sigma_z_total(enumerate_basis(8, Boundary.PBC))
        with pytest.raises(BasisMismatchError):
            project_operator(other, sector)
