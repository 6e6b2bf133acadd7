from math import factorial

import numpy as np
import pytest
from scipy import special

from core.basis import Boundary, enumerate_basis
from core.hamiltonians import PhysicalParams, op_hf2_kernel
from core.symmetry import build_sector_basis
from floquet.drive import CosineTwoTone, SquareAsymmetric, SquareTwoTone
from floquet.fpt import (
    a_coeff,
    asym_coefficients,
    fpt_for,
    fpt_hamiltonian,
    fpt_quadrature_oracle,
    hf1_asymmetric,
    hf1_cosine,
    hf1_square,
    hf2_asymmetric_special,
    hf2_square,
    i2_cosine,
    n_gamma,
    oracle_coefficient,
    special_frequencies,
    special_integers,
)

LAMBDA0 = 20.0
J0_FIRST_ZERO = 2.404825557695773


def params_at_gamma(gamma, w0=1.0, w1=1.0):
    return PhysicalParams(LAMBDA0, w0, w1, 2 * gamma / LAMBDA0)


class TestSquareClosedForms:

    def test_a_coefficient_values(self):
        assert a_coeff(2 * np.pi) == pytest.approx(-3 * np.sqrt(3) / (2 * np.pi) - 1, rel=1e-12)
        assert a_coeff(np.pi) == pytest.approx(3 * np.sqrt(3) / np.pi - 1, rel=1e-12)
        assert a_coeff(2 * np.pi) == pytest.approx(-1.826993, abs=1e-6)

    def test_a_coefficient_small_argument(self):
        assert a_coeff(0.0) == 0.0
        alpha = 1.1e-3
        assert a_coeff(alpha / 4) == pytest.approx(-13 * alpha**2 / 216, rel=1e-4)

    def test_n_gamma(self):
        assert n_gamma(params_at_gamma(2 * np.pi)) == pytest.approx(-0.03045, abs=1e-5)

    def test_first_order_vanishes_at_multiples_of_pi(self):
        for m in range(1, 5):
            assert abs(hf1_square(params_at_gamma(m * np.pi)).coefficient) < 1e-12

    def test_first_order_at_half_pi(self):
        result = hf1_square(params_at_gamma(np.pi / 2, w0=1.5))
        assert result.coefficient == pytest.approx(3 / np.pi)
        assert result.amplitude == pytest.approx(3j / np.pi)
        assert hf1_square(params_at_gamma(np.pi / 2), detuning_sign=-1).amplitude == pytest.approx(-2j / np.pi)

    def test_first_order_regular_at_zero(self):
        params = PhysicalParams(LAMBDA0, 1.0, 1.0, 1e-12)
        assert hf1_square(params).coefficient == pytest.approx(1.0)

    def test_second_order_sign_conventions(self):
        params = params_at_gamma(2 * np.pi)
        N = n_gamma(params)
        assert hf2_square(params).coefficient == pytest.approx(N)
        assert hf2_square(params, detuning_sign=-1).coefficient == pytest.approx(-N)
        assert hf2_square(params, detuning_sign=-1, w1_sign_flip=True).coefficient == pytest.approx(N)
        assert hf2_square(params).extras["A"] == pytest.approx(a_coeff(2 * np.pi))


class TestSquareOracle:

    @pytest.mark.parametrize("gamma_over_pi", [0.37, 1.0, 1.5, 2.0, 3.3])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_first_order(self, gamma_over_pi, sign):
        protocol = SquareTwoTone(params_at_gamma(gamma_over_pi * np.pi), detuning_sign=sign)
        assert abs(fpt_for(protocol, 1).amplitude - oracle_coefficient(protocol, 1)) < 1e-9

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    @pytest.mark.parametrize("sign, flip", [(1, False), (-1, False), (-1, True)])
    def test_second_order_at_special_points(self, m, sign, flip):
        protocol = SquareTwoTone(params_at_gamma(m * np.pi, w0=0.8, w1=1.3), detuning_sign=sign, w1_sign_flip=flip)
        assert fpt_for(protocol, 2).coefficient == pytest.approx(oracle_coefficient(protocol, 2).real, abs=1e-10)

    @pytest.mark.parametrize("gamma_over_pi", [0.37, 1.3, 1.75, 2.6])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_second_order_at_generic_gamma(self, gamma_over_pi, sign):
        protocol = SquareTwoTone(params_at_gamma(gamma_over_pi * np.pi), detuning_sign=sign)
        coefficient = fpt_for(protocol, 2).coefficient
        assert abs(coefficient) > 1e-4
        assert coefficient == pytest.approx(oracle_coefficient(protocol, 2).real, abs=1e-10)

    def test_first_order_independent_of_modulation(self):
        # the w1 part of the coupling integrates to zero for any odd q
        for q in (1, 3, 5, 7):
            with_w1 = SquareTwoTone(params_at_gamma(1.3 * np.pi, w1=2.0), q=q)
            without = SquareTwoTone(params_at_gamma(1.3 * np.pi, w1=0.0), q=q)
            assert oracle_coefficient(with_w1, 1) == pytest.approx(oracle_coefficient(without, 1), abs=1e-12)

    def test_general_ratio_uses_oracle(self):
        protocol = SquareTwoTone(params_at_gamma(2 * np.pi), q=5)
        assert fpt_for(protocol, 2).coefficient == pytest.approx(oracle_coefficient(protocol, 2).real)

    def test_operator_forms_agree(self):
        sector = build_sector_basis(enumerate_basis(10, Boundary.PBC), 0, 1)
        protocol = SquareTwoTone(params_at_gamma(2 * np.pi))
        analytic = fpt_for(protocol, 2).matrix(sector)
        oracle = fpt_quadrature_oracle(protocol, 2, sector)
        assert np.allclose(analytic.entries, oracle.entries, atol=1e-10)
        assert np.allclose(analytic.entries, (n_gamma(protocol.params) * -1 * op_hf2_kernel(sector)).entries)

    def test_combined_orders(self):
        basis = enumerate_basis(8, Boundary.PBC)
        protocol = SquareTwoTone(params_at_gamma(1.3 * np.pi))
        total = fpt_hamiltonian(protocol, basis)
        parts = fpt_for(protocol, 1).matrix(basis) + fpt_for(protocol, 2).matrix(basis)
        assert np.allclose(total.entries, parts.entries)
        first = fpt_hamiltonian(protocol, basis, orders=(1,))
        assert np.allclose(first.entries, fpt_for(protocol, 1).matrix(basis).entries)

    def test_rejects_unknown_order(self):
        with pytest.raises(ValueError):
            oracle_coefficient(SquareTwoTone(params_at_gamma(np.pi)), 3)


class TestCosine:

    def cosine_params(self, z1, w0=1.0, w1=1.0):
        return PhysicalParams(LAMBDA0, w0, w1, np.pi * z1 / LAMBDA0)

    def test_first_order(self):
        assert hf1_cosine(self.cosine_params(1.0)).coefficient == pytest.approx(0.7651976866, rel=1e-9)
        for eta in special.jn_zeros(0, 3):
            assert abs(hf1_cosine(self.cosine_params(eta)).coefficient) < 1e-10

    @pytest.mark.parametrize("z1", [0.3, 1.0, 4.5])
    def test_first_order_matches_ascending_series(self, z1):
        series = sum((-1) ** m * (z1 / 2) ** (2 * m) / factorial(m) ** 2 for m in range(40))
        assert hf1_cosine(self.cosine_params(z1, w0=2.0)).coefficient == pytest.approx(2.0 * series, abs=1e-12)

    @pytest.mark.parametrize("z1", [1.0, J0_FIRST_ZERO])
    def test_first_order_oracle(self, z1):
        protocol = CosineTwoTone(self.cosine_params(z1, w0=0.7, w1=1.1))
        c = oracle_coefficient(protocol, 1)
        assert c.real == pytest.approx(0.7 * special.jv(0, z1), abs=1e-9)
        assert abs(c.imag) < 1e-9

    @pytest.mark.parametrize("p_h", [0, 1])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_second_order_oracle(self, p_h, sign):
        protocol = CosineTwoTone(self.cosine_params(J0_FIRST_ZERO, w0=0.9, w1=1.2), p_h=p_h, detuning_sign=sign)
        analytic = fpt_for(protocol, 2).coefficient
        assert analytic == pytest.approx(oracle_coefficient(protocol, 2).real, rel=1e-6, abs=1e-9)

    def test_series_coefficient_scales_with_period(self):
        params = self.cosine_params(J0_FIRST_ZERO)
        result = fpt_for(CosineTwoTone(params), 2)
        assert result.extras["I2"] == pytest.approx(i2_cosine(params, 1))
        assert result.coefficient == pytest.approx(-i2_cosine(params, 1) / params.T1)


class TestAsymmetric:

    def setup_method(self):
        self.x = 10
        self.params = PhysicalParams(LAMBDA0, 1.0, 0.0, self.x * np.pi / LAMBDA0)

    def test_first_order_vanishes_at_special_fractions(self):
        for m2 in range(1, self.x):
            c1 = asym_coefficients(self.params, m2 / self.x).c1
            assert abs(c1[1]) < 1e-12 and abs(c1[-1]) < 1e-12

    def test_special_integers(self):
        assert special_integers(self.params, 0.3) == (-4, 3)
        assert special_integers(self.params, 0.7) == (4, 7)
        assert special_integers(self.params, 0.35) is None

    @pytest.mark.parametrize("p", [0.23, 0.5, 0.61])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_first_order_oracle(self, p, sign):
        params = PhysicalParams(LAMBDA0, 1.0, 0.0, 9.37 * np.pi / LAMBDA0)
        protocol = SquareAsymmetric(params, p, detuning_sign=sign)
        assert abs(fpt_for(protocol, 1).amplitude - oracle_coefficient(protocol, 1)) < 1e-9
        assert fpt_for(protocol, 1).amplitude == pytest.approx(hf1_asymmetric(params, p, sign).amplitude)

    @pytest.mark.parametrize("p", [0.3, 0.6, 0.8])
    @pytest.mark.parametrize("sign", [1, -1])
    def test_second_order_at_special_points(self, p, sign):
        protocol = SquareAsymmetric(self.params, p, detuning_sign=sign)
        assert fpt_for(protocol, 2).coefficient == pytest.approx(oracle_coefficient(protocol, 2).real, abs=1e-10)

    def test_half_weight_normalization_reported(self):
        result = hf2_asymmetric_special(self.params, 0.3)
        m1 = result.extras["m1"]
        assert result.extras["N1_half"] == pytest.approx(-np.pi * m1 / (4 * self.params.T1 * LAMBDA0**2))
        assert result.coefficient == pytest.approx(2 * result.extras["N1_half"])

    def test_second_order_needs_special_point(self):
        with pytest.raises(ValueError):
            hf2_asymmetric_special(self.params, 0.35)

    def test_generic_point_falls_back_to_oracle(self):
        protocol = SquareAsymmetric(self.params, 0.35)
        assert fpt_for(protocol, 2).coefficient == pytest.approx(oracle_coefficient(protocol, 2).real)


class TestSpecialFrequencies:

    def test_square(self):
        protocol = SquareTwoTone(params_at_gamma(np.pi))
        assert special_frequencies(protocol, 3) == pytest.approx([20.0, 10.0, 20.0 / 3])

    def test_cosine(self):
        protocol = CosineTwoTone(PhysicalParams(LAMBDA0, 1.0, 1.0, 0.3))
        assert special_frequencies(protocol, 1)[0] == pytest.approx(2 * LAMBDA0 / J0_FIRST_ZERO)

    def test_asymmetric(self):
        protocol = SquareAsymmetric(PhysicalParams(LAMBDA0, 1.0, 0.0, 10 * np.pi / LAMBDA0))
        points = special_frequencies(protocol, 20)
        assert len(points) == 9
        assert [p for p, _ in points] == pytest.approx([m / 10 for m in range(1, 10)])

    def test_asymmetric_without_integer_period(self):
        protocol = SquareAsymmetric(PhysicalParams(LAMBDA0, 1.0, 0.0, 9.5 * np.pi / LAMBDA0))
        assert special_frequencies(protocol, 5) == []

    def test_count_validated(self):
        with pytest.raises(ValueError):
            special_frequencies(SquareTwoTone(params_at_gamma(np.pi)), 0)
