"""Drive protocols, one-period Floquet operators and quasienergy spectra

The driven Hamiltonian is H(t) = w(t) Sum_j s~x_j + h(t) Sum_j sz_j with
h(t) = detuning_sign * a(t) * lambda0. The default detuning_sign = -1
reproduces H[a, b] = Sum_j [(w0 + b w1) s~x_j - a lambda0 sz_j].
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from core.errors import NumericalError
from core.hamiltonians import (
    PhysicalParams,
    Target,
    build_h_ab,
    op_sigma_x_tilde,
    op_sigma_z_total,
)
from core.operators import OperatorMatrix

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-10
NORMALITY_TOL = 1e-8
CLUSTER_TOL = 1e-10
COSINE_TOL = 1e-8
COSINE_MIN_STEPS = 64
COSINE_MAX_STEPS = 1 << 16

Segment = Tuple[float, int, int]


def _check_sign(value: int, name: str):
    if value not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {value}")


@dataclass(frozen=True)
class SquareTwoTone:
    """Square-pulse detuning at w1 with coupling modulated at q * w1"""

    params: PhysicalParams
    q: int = 3
    detuning_sign: int = -1
    w1_sign_flip: bool = False

    def __post_init__(self):
        if self.q < 1 or self.q % 2 == 0:
            raise ValueError(f"Frequency ratio q must be a positive odd integer, got {self.q}")
        _check_sign(self.detuning_sign, "detuning_sign")

    @property
    def tag(self) -> str:
        return f"square2:q={self.q}"


@dataclass(frozen=True)
class SquareAsymmetric:
    """Single-tone square pulse, -lambda0 for a fraction p of the period"""

    params: PhysicalParams
    p: float = 0.5
    detuning_sign: int = -1

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"Duty fraction p must lie in (0, 1), got {self.p}")
        _check_sign(self.detuning_sign, "detuning_sign")

    @property
    def tag(self) -> str:
        return f"asym:p={self.p:g}"


@dataclass(frozen=True)
class CosineTwoTone:
    """lambda(t) = lambda0 cos(omega1 t), w(t) = w0 + w1 cos((2 p_h + 1) omega1 t)"""

    params: PhysicalParams
    p_h: int = 1
    detuning_sign: int = -1

    def __post_init__(self):
        if self.p_h < 0:
            raise ValueError(f"Harmonic index must be non-negative, got {self.p_h}")
        _check_sign(self.detuning_sign, "detuning_sign")

    @property
    def tag(self) -> str:
        return f"cos2:p={self.p_h}"


DriveProtocol = Union[SquareTwoTone, SquareAsymmetric, CosineTwoTone]


def segments(protocol: DriveProtocol) -> List[Segment]:
    """Time-ordered (duration, a, b) pieces of one period"""
    T1 = protocol.params.T1
    if isinstance(protocol, SquareTwoTone):
        q = protocol.q
        first_b = 1 if protocol.w1_sign_flip else -1
        tau = T1 / (2 * q)
        return [(tau, 1 if k < q else -1, first_b * (-1) ** k) for k in range(2 * q)]
    if isinstance(protocol, SquareAsymmetric):
        return [(protocol.p * T1, -1, 0), ((1 - protocol.p) * T1, 1, 0)]
    raise TypeError(f"{type(protocol).__name__} is not a square-pulse protocol")


def coupling_profile(protocol: DriveProtocol) -> Callable[[float], float]:
    """w(t)"""
    params = protocol.params
    if isinstance(protocol, CosineTwoTone):
        nu = (2 * protocol.p_h + 1) * params.omega1
        return lambda t: params.w0 + params.w1 * np.cos(nu * t)
    pieces = segments(protocol)
    ends = np.cumsum([tau for tau, _, _ in pieces])
    values = [params.w0 + b * params.w1 for _, _, b in pieces]

    def w(t):
        return values[min(int(np.searchsorted(ends, t, side="right")), len(values) - 1)]

    return w


def detuning_profile(protocol: DriveProtocol) -> Callable[[float], float]:
    """h(t), the signed coefficient of Sum_j sz_j"""
    params = protocol.params
    s = protocol.detuning_sign
    if isinstance(protocol, CosineTwoTone):
        return lambda t: s * params.lambda0 * np.cos(params.omega1 * t)
    pieces = segments(protocol)
    ends = np.cumsum([tau for tau, _, _ in pieces])
    values = [s * a * params.lambda0 for _, a, _ in pieces]

    def h(t):
        return values[min(int(np.searchsorted(ends, t, side="right")), len(values) - 1)]

    return h


def _propagator(eigvals: np.ndarray, eigvecs: np.ndarray, tau: float) -> np.ndarray:
    return (eigvecs * np.exp(-1j * eigvals * tau)) @ eigvecs.conj().T


def _eigh(H: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    try:
        return linalg.eigh(H)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Eigendecomposition failed: {e}") from e


def check_unitary(U: np.ndarray, what: str = "Floquet operator"):
    D = U.shape[0]
    error = float(np.linalg.norm(U.conj().T @ U - np.eye(D)))
    if error >= UNITARITY_TOL * max(1.0, np.sqrt(D)):
        raise NumericalError(f"{what} is not unitary: |U^dag U - I|_F = {error:.3e}")


def floquet_operator(protocol: DriveProtocol, target: Target) -> OperatorMatrix:
    """U(T1, 0) as an ordered product of exact segment propagators"""
    if isinstance(protocol, CosineTwoTone):
        return floquet_operator_cosine(protocol, target)

    cache: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = {}
    U = np.eye(target.dim, dtype=complex)
    for tau, a, b in segments(protocol):
        if (a, b) not in cache:
            H = build_h_ab(target, protocol.params, a, b, protocol.detuning_sign)
            cache[(a, b)] = _eigh(H.entries)
        U = _propagator(*cache[(a, b)], tau) @ U

    check_unitary(U)
    logger.debug(f"Floquet operator {protocol.tag} on {target.tag}: D={target.dim}")
    return OperatorMatrix(U, target.tag)


def _cosine_product(X: np.ndarray, Z: np.ndarray, w, h, T1: float, steps: int) -> np.ndarray:
    delta = T1 / steps
    U = np.eye(X.shape[0], dtype=complex)
    for k in range(steps):
        t = (k + 0.5) * delta
        U = _propagator(*_eigh(w(t) * X + h(t) * Z), delta) @ U
    return U


def floquet_operator_cosine(protocol: CosineTwoTone, target: Target, steps: int = COSINE_MIN_STEPS) -> OperatorMatrix:
    """Midpoint-exponential product, refined by step doubling"""
    if steps < COSINE_MIN_STEPS or steps & (steps - 1):
        raise ValueError(f"Step count must be a power of two >= {COSINE_MIN_STEPS}, got {steps}")

    X = op_sigma_x_tilde(target).entries
    Z = op_sigma_z_total(target).entries
    w = coupling_profile(protocol)
    h = detuning_profile(protocol)
    T1 = protocol.params.T1

    U = _cosine_product(X, Z, w, h, T1, steps)
    while steps < COSINE_MAX_STEPS:
        refined = _cosine_product(X, Z, w, h, T1, 2 * steps)
        change = float(np.linalg.norm(refined - U))
        logger.debug(f"Cosine drive N_s={2 * steps}: change {change:.3e}")
        steps *= 2
        U = refined
        if change < COSINE_TOL:
            check_unitary(U)
            return OperatorMatrix(U, target.tag)

    raise NumericalError(f"Cosine Floquet operator not converged after {COSINE_MAX_STEPS} steps")


@dataclass(frozen=True, eq=False)
class FloquetSpectrum:
    """Eigenphases theta in (-pi, pi], sorted ascending, and eigenvectors"""

    theta: np.ndarray
    vectors: np.ndarray
    T1: float
    basis_tag: str
    meta: Dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.theta.shape[0])

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    @property
    def quasienergies(self) -> np.ndarray:
        return -self.theta / self.T1


def eigenphase_clusters(theta: np.ndarray) -> List[np.ndarray]:
    """Index groups of sorted phases closer than CLUSTER_TOL, merged across the +-pi seam"""
    breaks = np.nonzero(np.diff(theta) >= CLUSTER_TOL)[0] + 1
    clusters = np.split(np.arange(theta.shape[0]), breaks)
    if len(clusters) > 1 and theta[0] + 2 * np.pi - theta[-1] < CLUSTER_TOL:
        clusters = [np.concatenate([clusters[-1], clusters[0]])] + clusters[1:-1]
    return clusters


def _orthonormalize_clusters(theta: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    if theta.shape[0] < 2:
        return vectors
    for cluster in eigenphase_clusters(theta):
        if cluster.shape[0] > 1:
            q, _ = np.linalg.qr(vectors[:, cluster])
            vectors[:, cluster] = q
    return vectors


def floquet_spectrum(U: OperatorMatrix, T1: float = 1.0) -> FloquetSpectrum:
    """Complex Schur decomposition of a unitary, eigenphases by principal argument"""
    try:
        T, Q = linalg.schur(U.entries, output="complex")
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Schur decomposition failed: {e}") from e

    diag = np.diag(T)
    off = float(np.linalg.norm(T - np.diag(diag)))
    if off > NORMALITY_TOL * max(1.0, float(np.linalg.norm(T))):
        raise NumericalError(f"Operator is not normal: off-diagonal Schur weight {off:.3e}")
    drift = float(np.max(np.abs(np.abs(diag) - 1.0))) if diag.size else 0.0
    if drift > NORMALITY_TOL:
        raise NumericalError(f"Eigenvalues leave the unit circle by {drift:.3e}")

    theta = np.angle(diag)
    theta[theta <= -np.pi] = np.pi
    order = np.argsort(theta, kind="stable")
    theta = theta[order]
    vectors = _orthonormalize_clusters(theta, np.ascontiguousarray(Q[:, order]))
    return FloquetSpectrum(theta, vectors, T1, U.basis_tag)


def floquet_log_hamiltonian(spectrum: FloquetSpectrum, T1: Optional[float] = None) -> OperatorMatrix:
    """H_F = Sum_p E_p |p><p| with E_p = -theta_p / T1"""
    T1 = spectrum.T1 if T1 is None else T1
    V = spectrum.vectors
    H = (V * (-spectrum.theta / T1)) @ V.conj().T
    return OperatorMatrix.hermitian_from(H, spectrum.basis_tag, tol=UNITARITY_TOL)


def reduced_phases(theta: np.ndarray, n) -> np.ndarray:
    """theta_p * n mod 2 pi; shape (D,) for scalar n, (D, len(n)) otherwise"""
    n = np.asarray(n, dtype=float)
    if n.ndim == 0:
        return np.mod(theta * n, 2 * np.pi)
    return np.mod(np.outer(theta, n), 2 * np.pi)


def stroboscopic_evolve(spectrum: FloquetSpectrum, psi0: np.ndarray, n) -> np.ndarray:
    """psi(n T1) = Sum_p c_p e^{i n theta_p} |p>"""
    norm = float(np.linalg.norm(psi0))
    if abs(norm - 1.0) > UNITARITY_TOL:
        raise NumericalError(f"Initial state is not normalized, |psi0| = {norm:.12f}")
    c = spectrum.vectors.conj().T @ psi0
    if np.ndim(n) == 0:
        return spectrum.vectors @ (c * np.exp(1j * reduced_phases(spectrum.theta, n)))
    return spectrum.vectors @ (c[:, None] * np.exp(1j * reduced_phases(spectrum.theta, n)))
