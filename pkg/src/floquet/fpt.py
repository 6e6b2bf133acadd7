"""Floquet perturbation theory in the large-detuning limit

With H(t) = w(t) Sum s~x + h(t) Sum sz and theta(t) = int_0^t h, the
first two orders of the Floquet Hamiltonian at drive points where the
zeroth-order evolution is trivial are

    H1 = c1 Sum_j s~+_j + h.c.,      c1 = (1/T1) int w e^{2 i theta}
    H2 = (I2 / T1) K,                I2 = int_{t2<t1} w1 w2 sin(2 theta1 - 2 theta2)

with K the kernel of core.hamiltonians.op_hf2_kernel. Closed forms take
detuning_sign = +1 unless told otherwise; fpt_for() evaluates them in a
protocol's own convention.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from core.errors import NumericalError
from core.hamiltonians import (
    PhysicalParams,
    Target,
    op_hf2_kernel,
    operator_matrix,
    sigma_plus_tilde_terms,
    with_adjoint,
)
from core.operators import OperatorMatrix
from floquet.drive import CosineTwoTone, DriveProtocol, SquareAsymmetric, SquareTwoTone, segments

logger = logging.getLogger(__name__)

SERIES_TOL = 1e-15
SPECIAL_POINT_TOL = 1e-9
_SMALL_ALPHA = 1e-3


@dataclass(frozen=True)
class FptResult:
    """One perturbative order: a scalar times a fixed operator kernel

    Order 1 multiplies Sum (e^{i phase} s~+ + h.c.), order 2 multiplies the
    op_hf2_kernel operator.
    """

    order: int
    coefficient: float
    protocol_tag: str
    phase: float = 0.0
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def kernel(self) -> str:
        return "sigma_tilde_rotated" if self.order == 1 else "hf2_kernel"

    @property
    def amplitude(self) -> complex:
        """Coefficient of Sum s~+ (order 1)"""
        return self.coefficient * np.exp(1j * self.phase)

    def matrix(self, target: Target) -> OperatorMatrix:
        if self.order == 1:
            return operator_matrix(with_adjoint(sigma_plus_tilde_terms(self.amplitude)), target)
        return self.coefficient * op_hf2_kernel(target)


def gamma(params: PhysicalParams) -> float:
    return params.gamma


def hf1_square(params: PhysicalParams, detuning_sign: int = 1) -> FptResult:
    """c = w0 sin(gamma)/gamma with phase e^{i gamma}; vanishes at gamma = m pi"""
    g = params.gamma
    coefficient = params.w0 * float(np.sinc(g / np.pi))
    return FptResult(1, coefficient, "square2", phase=detuning_sign * g, extras={"gamma": g})


def a_coeff(g: float) -> float:
    """A(alpha) = (6/alpha)[2 sin(alpha/6) - 2 sin(alpha/3) + sin(alpha/2)] - 1, alpha = 4 gamma"""
    alpha = 4.0 * g
    if abs(alpha) < _SMALL_ALPHA:
        # A = -13 alpha^2 / 216 + O(alpha^4)
        return -13.0 * alpha**2 / 216.0
    bracket = 2 * np.sin(alpha / 6) - 2 * np.sin(alpha / 3) + np.sin(alpha / 2)
    return float(6.0 / alpha * bracket - 1.0)


def n_gamma(params: PhysicalParams) -> float:
    """N(gamma) = w0 w1 A(gamma) / (3 lambda0)"""
    return params.w0 * params.w1 * a_coeff(params.gamma) / (3 * params.lambda0)


def hf2_square(params: PhysicalParams, detuning_sign: int = 1, w1_sign_flip: bool = False) -> FptResult:
    """H2 = N(gamma) K for the q = 3 two-tone square drive"""
    sign = detuning_sign * (-1 if w1_sign_flip else 1)
    N = n_gamma(params)
    return FptResult(2, sign * N, "square2", extras={"gamma": params.gamma, "A": a_coeff(params.gamma), "N": N})


def hf1_cosine(params: PhysicalParams) -> FptResult:
    """w0 J0(z1), independent of the detuning sign"""
    z1 = params.z1
    return FptResult(1, params.w0 * float(special.jv(0, z1)), "cos2", extras={"z1": z1})


def i2_cosine(params: PhysicalParams, p_h: int = 1) -> float:
    """Second-order double integral of the cosine drive as a Bessel series

    With k = 2 p_h + 1 and z = z1,
        I2 = (4 T1 / omega1) [ -w0^2 J0 Sum_{m odd} J_m / m
                           - (w0 w1 / 2) J0 Sum_{m even > 0} (J_{m+k} + J_{m-k}) / m
                           + (w0 w1 / 2) Sum_{m > 0} J_m (J_{m+k} + J_{m-k}) / m ]
    """
    z = params.z1
    k = 2 * p_h + 1
    n_max = int(np.ceil(abs(z))) + k + 60
    m = np.arange(1, n_max + 1)
    J = special.jv(m, z)
    J0 = float(special.jv(0, z))
    shifted = special.jv(m + k, z) + special.jv(m - k, z)

    odd = np.where(m % 2 == 1, J / m, 0.0)
    even = np.where(m % 2 == 0, shifted / m, 0.0)
    mixed = J * shifted / m
    terms = (
        -params.w0**2 * J0 * odd
        - 0.5 * params.w0 * params.w1 * J0 * even
        + 0.5 * params.w0 * params.w1 * mixed
    )
    total = float(terms.sum())
    if np.any(np.abs(terms[-3:]) > SERIES_TOL * max(1.0, abs(total))):
        raise NumericalError(f"Bessel series for z1={z:.4g} not converged at m={n_max}")
    return 4.0 * params.T1 / params.omega1 * total


def hf2_cosine(params: PhysicalParams, p_h: int = 1, detuning_sign: int = 1) -> FptResult:
    I2 = i2_cosine(params, p_h)
    return FptResult(2, detuning_sign * I2 / params.T1, "cos2", extras={"z1": params.z1, "I2": I2})


@dataclass(frozen=True)
class AsymCoefficients:
    """FPT coefficients of the single-tone asymmetric drive, keyed by s = +-1"""

    c1: Dict[int, complex]
    c2: Dict[Tuple[int, int], complex]


def asym_coefficients(params: PhysicalParams, p: float) -> AsymCoefficients:
    if not 0 < p < 1:
        raise ValueError(f"Duty fraction p must lie in (0, 1), got {p}")
    lam, T = params.lambda0, params.T1
    c1, c2 = {}, {}
    for s in (1, -1):
        c1[s] = 2j * s / lam * (1 - 2 * np.exp(2j * lam * s * p * T) + np.exp(2j * lam * s * (2 * p - 1) * T))
        c2[(s, s)] = -1 / (8 * lam**2) * (
            1
            - 2 * np.exp(2j * p * s * T * lam)
            + 2 * np.exp(4j * p * s * T * lam)
            + np.exp(4j * (2 * p - 1) * s * T * lam)
            - 2 * np.exp(2j * (3 * p - 1) * s * T * lam)
        )
        c2[(s, -s)] = -1 / (8 * lam**2) * (
            -2
            + np.exp(2j * (1 - p) * s * T * lam)
            + np.exp(2j * p * s * T * lam)
            - 2j * lam * T * (2 * p - 1)
        )
    return AsymCoefficients(c1, c2)


def hf1_asymmetric(params: PhysicalParams, p: float, detuning_sign: int = 1) -> FptResult:
    """s~+ amplitude w0 C_{-s} / (4 T1)"""
    amplitude = params.w0 * asym_coefficients(params, p).c1[-detuning_sign] / (4 * params.T1)
    return FptResult(1, float(abs(amplitude)), f"asym:p={p:g}", phase=float(np.angle(amplitude)))


def special_integers(params: PhysicalParams, p: float) -> Optional[Tuple[int, int]]:
    """(m1, m2) with lambda0 T1 (2p-1) = m1 pi and lambda0 T1 p = m2 pi, if any"""
    x = params.lambda0 * params.T1 / np.pi
    m1, m2 = x * (2 * p - 1), x * p
    if abs(m1 - round(m1)) < SPECIAL_POINT_TOL and abs(m2 - round(m2)) < SPECIAL_POINT_TOL:
        return int(round(m1)), int(round(m2))
    return None


def hf2_asymmetric_special(params: PhysicalParams, p: float, detuning_sign: int = 1) -> FptResult:
    """H2 = -s w0^2 pi m1 / (2 T1 lambda0^2) K at points where U0 = U1 = I"""
    integers = special_integers(params, p)
    if integers is None:
        raise ValueError(f"p={p} is not a special point for lambda0 T1 = {params.lambda0 * params.T1:g}")
    m1, m2 = integers
    denom = params.T1 * params.lambda0**2
    coefficient = -detuning_sign * params.w0**2 * np.pi * m1 / (2 * denom)
    half_weight = -params.w0**2 * np.pi * m1 / (4 * denom)
    return FptResult(2, coefficient, f"asym:p={p:g}", extras={"m1": m1, "m2": m2, "N1_half": half_weight})


def _piecewise_integrals(protocol: DriveProtocol) -> Tuple[complex, float]:
    """Exact (int w e^{2i theta}, I2) for a square protocol"""
    params = protocol.params
    s = protocol.detuning_sign
    theta = 0.0
    S_all: List[complex] = []
    diagonal = 0.0 + 0.0j
    for tau, a, b in segments(protocol):
        h = s * a * params.lambda0
        w = params.w0 + b * params.w1
        v = 2.0 * h
        if v == 0.0:
            S = w * np.exp(2j * theta) * tau
            D = tau**2 / 2
        else:
            S = w * np.exp(2j * theta) * (np.exp(1j * v * tau) - 1) / (1j * v)
            D = (tau - (np.exp(1j * v * tau) - 1) / (1j * v)) / (-1j * v)
        diagonal += w**2 * D
        S_all.append(S)
        theta += h * tau

    S_arr = np.array(S_all)
    earlier = np.concatenate([[0.0], np.cumsum(S_arr)[:-1]])
    I2 = float(np.imag(diagonal + np.sum(S_arr * np.conj(earlier))))
    return complex(S_arr.sum()), I2


def _quad_complex(f, a: float, b: float) -> complex:
    re, err_re = integrate.quad(lambda t: np.real(f(t)), a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
    im, err_im = integrate.quad(lambda t: np.imag(f(t)), a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
    if max(err_re, err_im) > 1e-9:
        raise NumericalError(f"Quadrature error estimate {max(err_re, err_im):.2e} too large")
    return re + 1j * im


def _cosine_integrals(protocol: CosineTwoTone, order: int) -> Tuple[complex, float]:
    params = protocol.params
    s = protocol.detuning_sign
    nu = (2 * protocol.p_h + 1) * params.omega1

    def w(t):
        return params.w0 + params.w1 * np.cos(nu * t)

    def theta(t):
        return s * params.lambda0 / params.omega1 * np.sin(params.omega1 * t)

    S = _quad_complex(lambda t: w(t) * np.exp(2j * theta(t)), 0.0, params.T1)
    if order == 1:
        return S, 0.0
    I2, err = integrate.dblquad(
        lambda t2, t1: w(t1) * w(t2) * np.sin(2 * theta(t1) - 2 * theta(t2)),
        0.0, params.T1, 0.0, lambda t1: t1,
        epsabs=1e-11, epsrel=1e-11,
    )
    if err > 1e-8:
        raise NumericalError(f"Double quadrature error estimate {err:.2e} too large")
    return S, float(I2)


def oracle_coefficient(protocol: DriveProtocol, order: int) -> complex:
    """c1 (order 1) or I2 / T1 (order 2) by direct integration"""
    if order not in (1, 2):
        raise ValueError(f"Only orders 1 and 2 are available, got {order}")
    if isinstance(protocol, CosineTwoTone):
        S, I2 = _cosine_integrals(protocol, order)
    else:
        S, I2 = _piecewise_integrals(protocol)
    T1 = protocol.params.T1
    return S / T1 if order == 1 else I2 / T1


def fpt_quadrature_oracle(protocol: DriveProtocol, order: int, target: Target) -> OperatorMatrix:
    """Order-1 or order-2 Floquet Hamiltonian assembled from numerical integrals"""
    c = oracle_coefficient(protocol, order)
    if order == 1:
        return operator_matrix(with_adjoint(sigma_plus_tilde_terms(c)), target)
    return float(np.real(c)) * op_hf2_kernel(target)


def fpt_for(protocol: DriveProtocol, order: int) -> FptResult:
    """Closed-form order in the protocol's own sign convention"""
    params = protocol.params
    s = protocol.detuning_sign
    if isinstance(protocol, SquareTwoTone):
        if order == 1:
            return hf1_square(params, s)
        if protocol.q == 3:
            return hf2_square(params, s, protocol.w1_sign_flip)
        return FptResult(2, float(np.real(oracle_coefficient(protocol, 2))), protocol.tag)
    if isinstance(protocol, SquareAsymmetric):
        if order == 1:
            return hf1_asymmetric(params, protocol.p, s)
        if special_integers(params, protocol.p) is not None:
            return hf2_asymmetric_special(params, protocol.p, s)
        return FptResult(2, float(np.real(oracle_coefficient(protocol, 2))), protocol.tag)
    if order == 1:
        return hf1_cosine(params)
    return hf2_cosine(params, protocol.p_h, s)


def fpt_hamiltonian(protocol: DriveProtocol, target: Target, orders=(1, 2)) -> OperatorMatrix:
    """Sum of the requested perturbative orders"""
    total = None
    for order in orders:
        term = fpt_for(protocol, order).matrix(target)
        total = term if total is None else total + term
    return total


def special_frequencies(protocol: DriveProtocol, count: int) -> list:
    """Drive frequencies at which the first-order term vanishes

    Square two-tone: w1 = lambda0 / m. Cosine: w1 = 2 lambda0 / eta_n with
    eta_n the zeros of J0. Asymmetric: (p, T1) pairs at fixed T1.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    lam = protocol.params.lambda0
    if isinstance(protocol, SquareTwoTone):
        return [lam / m for m in range(1, count + 1)]
    if isinstance(protocol, CosineTwoTone):
        return list(2 * lam / special.jn_zeros(0, count))

    T1 = protocol.params.T1
    x = lam * T1 / np.pi
    if abs(x - round(x)) > SPECIAL_POINT_TOL:
        logger.warning(f"lambda0 T1 / pi = {x:.6g} is not an integer; no special duty fractions")
        return []
    x = int(round(x))
    return [(m2 / x, T1) for m2 in range(1, x)][:count]
