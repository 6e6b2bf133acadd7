import numpy as np
import pytest
from scipy import linalg

from core.basis import Boundary, constrained_sector_basis, enumerate_basis, fibonacci, fixed_n_basis, lucas, spin_basis
from core.errors import BasisError, BasisMismatchError, NumericalError
from core.hamiltonians import (
    LocalTerm,
    PhysicalParams,
    build_h_ab,
    build_third_charge_pxp,
    build_third_charge_xxz,
    build_xxz,
    op_hf2_kernel,
    op_identity,
    op_sigma_tilde_rotated,
    op_sigma_x_tilde,
    op_sigma_z_total,
    operator_matrix,
    with_adjoint,
)
from core.operators import OperatorMatrix
from core.symmetry import build_sector_basis, reflection_permutation, translation_permutation


class TestPhysicalParams:

    def test_derived_quantities(self):
        params = PhysicalParams(20.0, 1.0, 1.0, 2 * np.pi / 10)
        assert params.gamma == pytest.approx(2 * np.pi)
        assert params.omega1 == pytest.approx(10.0)
        assert params.z1 == pytest.approx(4.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            PhysicalParams(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            PhysicalParams(20.0, -1.0, 1.0, 1.0)


class TestConstrainedOperators:

    def setup_method(self):
        self.basis = enumerate_basis(10, Boundary.PBC)

    def test_two_site_open_chain(self):
        X = op_sigma_x_tilde(enumerate_basis(2, Boundary.OBC)).entries
        expected = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
        assert np.allclose(X, expected)

    def test_pxp_spectrum_is_symmetric(self):
        energies = linalg.eigvalsh(op_sigma_x_tilde(self.basis).entries)
        assert np.allclose(energies, -energies[::-1], atol=1e-10)

    def test_total_sz_trace(self):
        # site 0 is up in F(L-1) of the Lucas(L) periodic states
        for L in (6, 9, 12):
            basis = enumerate_basis(L, Boundary.PBC)
            expected = 2 * L * fibonacci(L - 1) - L * lucas(L)
            assert op_sigma_z_total(basis).trace().real == pytest.approx(expected)
        assert op_sigma_z_total(enumerate_basis(6, Boundary.PBC)).trace().real == pytest.approx(-48)

    def test_sector_trace(self):
        sector = build_sector_basis(enumerate_basis(6, Boundary.PBC), 0, 1)
        assert sector.dim == 5
        assert op_sigma_z_total(sector).trace().real == pytest.approx(-14)

    def test_kernel_conserves_filling(self):
        K = op_hf2_kernel(self.basis).entries
        N = self.basis.popcounts()
        rows, cols = np.nonzero(np.abs(K) > 1e-14)
        assert np.all(N[rows] == N[cols])

    def test_kernel_in_fixed_filling_block(self):
        block = constrained_sector_basis(10, 3, Boundary.PBC)
        full = op_hf2_kernel(self.basis).entries
        idx = self.basis.find(block.states)
        assert np.allclose(op_hf2_kernel(block).entries, full[np.ix_(idx, idx)])

    def test_rotated_operator(self):
        X = op_sigma_x_tilde(self.basis)
        assert np.allclose(op_sigma_tilde_rotated(self.basis, 0.0).entries, X.entries)
        Y = op_sigma_tilde_rotated(self.basis, np.pi / 2)
        assert Y.hermitian
        assert np.allclose(Y.entries.real, 0.0)

    def test_h_ab_convention(self):
        params = PhysicalParams(20.0, 1.5, 0.5, 0.3)
        X = op_sigma_x_tilde(self.basis)
        Z = op_sigma_z_total(self.basis)
        H = build_h_ab(self.basis, params, a=1, b=-1)
        assert np.allclose(H.entries, (1.0 * X + (-20.0) * Z).entries)
        H = build_h_ab(self.basis, params, a=-1, b=1, detuning_sign=1)
        assert np.allclose(H.entries, (2.0 * X + (-20.0) * Z).entries)

    def test_unknown_symbol(self):
        with pytest.raises(ValueError):
            operator_matrix([LocalTerm(1.0, ((0, "q"),))], self.basis)

    def test_non_hermitian_terms_rejected(self):
        raising = [LocalTerm(1.0, ((-1, "d"), (0, "+"), (1, "d")))]
        with pytest.raises(NumericalError):
            operator_matrix(raising, self.basis)
        assert not operator_matrix(raising, self.basis, hermitian=False).hermitian
        assert operator_matrix(with_adjoint(raising), self.basis).hermitian


class TestXXZ:

    def test_two_site_block(self):
        H = build_xxz(2, 1.0, -0.5, Boundary.OBC, N=1)
        assert np.allclose(linalg.eigvalsh(H.entries), [0.5 - 2.0, 0.5 + 2.0])

    def test_heisenberg_ring(self):
        H = build_xxz(4, 1.0, 1.0, Boundary.PBC)
        assert linalg.eigvalsh(H.entries)[0] == pytest.approx(-8.0)

    def test_conserves_magnetization(self):
        H = build_xxz(8, 1.0, -0.5, Boundary.PBC)
        basis = spin_basis(8, Boundary.PBC)
        N = basis.popcounts()
        rows, cols = np.nonzero(np.abs(H.entries) > 1e-14)
        assert np.all(N[rows] == N[cols])

    def test_boundary_field_and_offset(self):
        plain = build_xxz(5, 1.0, -0.5, Boundary.OBC, N=2)
        shifted = build_xxz(5, 1.0, -0.5, Boundary.OBC, N=2, offset=3.0)
        assert np.allclose(shifted.entries - plain.entries, 3.0 * np.eye(plain.dim))
        edged = build_xxz(5, 1.0, -0.5, Boundary.OBC, h_edge=0.25, N=2)
        diff = np.diag(edged.entries - plain.entries).real
        basis = fixed_n_basis(5, 2, Boundary.OBC)
        ends = [(1 if s.up(0) else -1) + (1 if s.up(4) else -1) for s in basis]
        assert np.allclose(diff, 0.25 * np.array(ends))

    @pytest.mark.parametrize("L", [5, 6, 7, 8])
    def test_third_charge_commutes(self, L):
        H = build_xxz(L, 1.0, -0.5, Boundary.PBC)
        C = build_third_charge_xxz(L, 1.0, -0.5)
        assert H.commutator(C).norm() < 1e-10
        assert C.norm() > 1.0

    def test_constrained_third_charge_conserves_filling(self):
        basis = enumerate_basis(12, Boundary.PBC)
        C = build_third_charge_pxp(basis, 1.0, -0.5)
        assert op_sigma_z_total(basis).commutator(C).norm() < 1e-10
        assert C.norm() > 1.0

    def test_constrained_third_charge_is_translation_invariant(self):
        basis = enumerate_basis(12, Boundary.PBC)
        C = build_third_charge_pxp(basis, 1.0, -0.5).entries
        perm = translation_permutation(basis)
        assert np.allclose(C[np.ix_(perm, perm)], C)

    def test_constrained_third_charge_commutes_with_kernel(self):
        sector = build_sector_basis(enumerate_basis(12, Boundary.PBC), 0, None)
        C = build_third_charge_pxp(sector, 1.0, -0.5)
        assert op_hf2_kernel(sector).commutator(C).norm() < 1e-10

    def test_constrained_third_charge_is_parity_odd(self):
        basis = enumerate_basis(12, Boundary.PBC)
        C = build_third_charge_pxp(basis, 1.0, -0.5).entries
        perm = reflection_permutation(basis)
        assert np.linalg.norm(C[np.ix_(perm, perm)] + C) < 1e-10
        assert np.linalg.norm(C) > 1.0

    def test_constrained_third_charge_needs_long_ring(self):
        with pytest.raises(BasisError):
            build_third_charge_pxp(enumerate_basis(5, Boundary.PBC), 1.0, -0.5)
        with pytest.raises(BasisError):
            build_third_charge_pxp(enumerate_basis(8, Boundary.OBC), 1.0, -0.5)


class TestOperatorMatrix:

    def test_algebra(self):
        basis = enumerate_basis(6, Boundary.PBC)
        X, I = op_sigma_x_tilde(basis), op_identity(basis)
        assert np.allclose((X + I - I).entries, X.entries)
        assert np.allclose((X @ I).entries, X.entries)
        assert X.commutator(X).norm() == 0.0
        assert (2 * X).hermitian
        assert not (1j * X).hermitian

    def test_basis_mismatch(self):
        A = op_identity(enumerate_basis(6, Boundary.PBC))
        B = op_identity(enumerate_basis(6, Boundary.OBC))
        with pytest.raises(BasisMismatchError):
            A + B

    def test_hermitian_flag_checked(self):
        with pytest.raises(NumericalError):
            OperatorMatrix(np.array([[0, 1], [0, 0]], dtype=complex), "t", hermitian=True)
        with pytest.raises(ValueError):
            OperatorMatrix(np.zeros((2, 3)), "t")
