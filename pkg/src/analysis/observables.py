"""Diagnostics of Floquet spectra and stroboscopic dynamics"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from core.basis import Boundary, ConstrainedBasis
from core.errors import BasisMismatchError, SymmetryError
from core.hamiltonians import Target
from core.operators import OperatorMatrix
from core.symmetry import SectorBasis, expand_to_full, project_to_sector
from floquet.drive import (
    DriveProtocol,
    FloquetSpectrum,
    eigenphase_clusters,
    floquet_operator,
    floquet_spectrum,
    reduced_phases,
)

logger = logging.getLogger(__name__)

POISSON_R = 2 * np.log(2) - 1
COE_R = 0.5307
ENTANGLEMENT_CUTOFF = 1e-12
CHARGE_TOL = 1e-10
MIN_LEVELS = 50
LONG_HORIZON = 10**12
_CHUNK = 256


@dataclass(frozen=True, eq=False)
class SpacingStats:
    """Consecutive-gap ratios r_p = min(s_p, s_{p+1}) / max(s_p, s_{p+1})"""

    ratios: np.ndarray
    histogram: np.ndarray
    bin_edges: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def n_bin(self) -> int:
        return int(self.histogram.shape[0])

    @property
    def bin_width(self) -> float:
        return 1.0 / self.n_bin


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    n: np.ndarray
    values: np.ndarray
    observable_id: str
    initial_state_id: str = ""

    def __post_init__(self):
        if self.n.shape[0] != self.values.shape[0]:
            raise ValueError(f"{self.n.shape[0]} cycle indices but {self.values.shape[0]} values")


def _phases(spectrum: Union[FloquetSpectrum, np.ndarray]) -> np.ndarray:
    if isinstance(spectrum, FloquetSpectrum):
        return spectrum.theta
    return np.asarray(spectrum, dtype=float)


def level_spacing_stats(spectrum: Union[FloquetSpectrum, np.ndarray], n_bin: int = 50) -> SpacingStats:
    """Gap-ratio statistics of eigenphases inside (-pi, pi], no wrap-around gap"""
    theta = np.sort(_phases(spectrum))
    if theta.shape[0] < 3:
        raise ValueError(f"Need at least 3 levels for spacing ratios, got {theta.shape[0]}")
    if theta.shape[0] < MIN_LEVELS:
        logger.warning(f"Only {theta.shape[0]} levels; spacing statistics will be noisy")

    gaps = np.diff(theta)
    lo = np.minimum(gaps[:-1], gaps[1:])
    hi = np.maximum(gaps[:-1], gaps[1:])
    defined = hi > 0
    if not np.all(defined):
        logger.warning(f"Dropping {int((~defined).sum())} ratios of exactly degenerate level triples")
    ratios = lo[defined] / hi[defined]

    histogram, edges = np.histogram(ratios, bins=n_bin, range=(0.0, 1.0), density=True)
    return SpacingStats(ratios, histogram, edges)


def poisson_phases(D: int, rng: np.random.Generator) -> np.ndarray:
    """Uncorrelated eigenphases"""
    return rng.uniform(-np.pi, np.pi, D)


def coe_phases(D: int, rng: np.random.Generator) -> np.ndarray:
    """Eigenphases of U^T U with U Haar-distributed, a COE matrix"""
    U = unitary_group.rvs(D, random_state=rng)
    return np.angle(linalg.eigvals(U.T @ U))


def _full_vector(vec: np.ndarray, target: Target) -> np.ndarray:
    if isinstance(target, SectorBasis):
        return expand_to_full(vec, target)
    return np.asarray(vec, dtype=complex)


def entanglement_entropy(vec: np.ndarray, target: Target) -> float:
    """Half-chain von Neumann entropy (nats), sites 0..L/2-1 against the rest"""
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"State must be normalized, |psi| = {norm:.10f}")
    basis = target.basis if isinstance(target, SectorBasis) else target
    if basis.L % 2:
        raise ValueError(f"Half-chain bipartition needs even L, got {basis.L}")

    psi = _full_vector(vec, target)
    half = basis.L // 2
    a_words, a_index = np.unique(basis.states & ((1 << half) - 1), return_inverse=True)
    b_words, b_index = np.unique(basis.states >> half, return_inverse=True)
    M = np.zeros((a_words.shape[0], b_words.shape[0]), dtype=complex)
    M[a_index.reshape(-1), b_index.reshape(-1)] = psi

    weights = linalg.eigvalsh(M @ M.conj().T)
    weights = weights[weights > ENTANGLEMENT_CUTOFF]
    return float(-np.sum(weights * np.log(weights)))


def sff(spectrum: Union[FloquetSpectrum, np.ndarray], n) -> np.ndarray:
    """K(n) = |Sum_p e^{i theta_p n}|^2 / D^2"""
    theta = _phases(spectrum)
    D = theta.shape[0]
    n_arr = np.atleast_1d(np.asarray(n, dtype=float))
    values = np.empty(n_arr.shape[0])
    for start in range(0, n_arr.shape[0], _CHUNK):
        block = n_arr[start:start + _CHUNK]
        trace = np.exp(1j * reduced_phases(theta, block)).sum(axis=0)
        values[start:start + _CHUNK] = np.abs(trace) ** 2 / D**2
    return values if np.ndim(n) else values[0]


def sff_averaged(protocol: DriveProtocol, target: Target, n_list: Sequence[int], w0_values: Sequence[float]) -> ObservableSeries:
    """K(n) averaged over a window of static couplings w0"""
    n = np.asarray(n_list)
    total = np.zeros(n.shape[0])
    for w0 in w0_values:
        shifted = dataclasses.replace(protocol, params=dataclasses.replace(protocol.params, w0=float(w0)))
        spectrum = floquet_spectrum(floquet_operator(shifted, target), shifted.params.T1)
        total += sff(spectrum, n)
    return ObservableSeries(n, total / len(w0_values), "sff")


def sff_dip_time(series: ObservableSeries, D: int, smooth: int = 5) -> Optional[int]:
    """First cycle n > 0 at which the running mean of K over `smooth` points reaches 1/D"""
    if smooth < 1 or series.n.shape[0] < smooth:
        raise ValueError(f"Cannot smooth {series.n.shape[0]} points over a window of {smooth}")
    smoothed = np.convolve(series.values, np.ones(smooth) / smooth, mode="valid")
    centers = series.n[smooth // 2: smooth // 2 + smoothed.shape[0]]
    hits = np.nonzero((smoothed <= 1.0 / D) & (centers > 0))[0]
    if hits.size == 0:
        logger.warning(f"K never reaches the plateau 1/D = {1.0 / D:.3e} before n = {int(series.n[-1])}")
        return None
    return int(centers[hits[0]])


def _check_basis(spectrum: FloquetSpectrum, op: OperatorMatrix):
    if spectrum.basis_tag != op.basis_tag:
        raise BasisMismatchError(f"Operator basis {op.basis_tag} does not match spectrum basis {spectrum.basis_tag}")


def magnetization_series(
    spectrum: FloquetSpectrum,
    psi0: np.ndarray,
    op: OperatorMatrix,
    n_list: Sequence[int],
    L: int,
    observable_id: str = "Mz",
    initial_state_id: str = "",
) -> ObservableSeries:
    """<psi(n)| op |psi(n)> / L evaluated in the Floquet eigenbasis"""
    _check_basis(spectrum, op)
    n = np.asarray(n_list)
    if n.size and float(np.max(n)) > LONG_HORIZON:
        logger.warning(f"Cycle counts beyond {LONG_HORIZON:.0e} exceed double-precision phase resolution")

    V = spectrum.vectors
    op_eig = V.conj().T @ op.entries @ V
    c = V.conj().T @ psi0
    values = np.empty(n.shape[0])
    for start in range(0, n.shape[0], _CHUNK):
        block = n[start:start + _CHUNK]
        coeffs = c[:, None] * np.exp(1j * reduced_phases(spectrum.theta, block))
        values[start:start + _CHUNK] = np.real(np.einsum("pk,pq,qk->k", coeffs.conj(), op_eig, coeffs)) / L
    return ObservableSeries(n, values, observable_id, initial_state_id)


def diagonal_ensemble(spectrum: FloquetSpectrum, psi0: np.ndarray, op: OperatorMatrix, L: int) -> float:
    """Infinite-time average, with degenerate eigenphases treated through cluster projectors"""
    _check_basis(spectrum, op)
    V = spectrum.vectors
    clusters = eigenphase_clusters(spectrum.theta)
    degenerate = sum(1 for c in clusters if c.shape[0] > 1)
    if degenerate:
        logger.warning(f"{degenerate} degenerate eigenphase clusters; averaging within their projectors")

    total = 0.0
    for cluster in clusters:
        Vc = V[:, cluster]
        amp = Vc.conj().T @ psi0
        total += float(np.real(np.vdot(amp, (Vc.conj().T @ op.entries @ Vc) @ amp)))
    return total / L


def ite_average(target: Target, op: OperatorMatrix) -> float:
    """Infinite-temperature value tr(op) / (D L)"""
    if op.basis_tag != target.tag:
        raise BasisMismatchError(f"Operator basis {op.basis_tag} does not match {target.tag}")
    return float(np.real(op.trace())) / (target.dim * target.L)


def steady_state_average(
    spectrum: FloquetSpectrum,
    psi0: np.ndarray,
    op: OperatorMatrix,
    L: int,
    n0: int = 10**6,
    window: int = 200,
) -> float:
    """Mean of the stroboscopic observable over n0 .. n0 + window - 1"""
    if window < 1:
        raise ValueError(f"Window must be >= 1, got {window}")
    series = magnetization_series(spectrum, psi0, op, n0 + np.arange(window), L)
    return float(np.mean(series.values))


def thermalization_time(
    spectrum: FloquetSpectrum,
    psi0: np.ndarray,
    op: OperatorMatrix,
    L: int,
    threshold: float = 0.05,
    n_max: int = 10**8,
    points_per_decade: int = 20,
) -> Optional[int]:
    """First cycle n with |M(n) - M(0)| > threshold |M(0)|, or None beyond n_max"""
    m0 = magnetization_series(spectrum, psi0, op, [0], L).values[0]
    bound = threshold * max(abs(m0), 1e-12)

    def left(n_values):
        values = magnetization_series(spectrum, psi0, op, n_values, L).values
        return np.abs(values - m0) > bound

    decades = np.log10(float(n_max))
    grid = np.unique(np.round(np.logspace(0, decades, int(np.ceil(decades * points_per_decade)) + 1)).astype(np.int64))
    hits = np.nonzero(left(grid))[0]
    if hits.size == 0:
        return None

    hi = int(grid[hits[0]])
    lo = int(grid[hits[0] - 1]) if hits[0] > 0 else 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if left([mid])[0]:
            hi = mid
        else:
            lo = mid
    return hi


def commutator_norm(A: OperatorMatrix, B: OperatorMatrix) -> float:
    """|AB - BA|_F"""
    return A.commutator(B).norm()


def _named_word(name: str, L: int) -> list:
    odd = sum(1 << j for j in range(1, L, 2))
    even = sum(1 << j for j in range(0, L, 2))
    words = {"vac": [0], "z2": [odd], "z2bar": [even], "afm": [odd, even]}
    if name not in words:
        raise ValueError(f"Unknown initial state {name!r}; choose from {sorted(words)}")
    return words[name]


def initial_state(name: str, target: Target) -> np.ndarray:
    """vac, z2 (up on odd sites), z2bar (up on even sites) or afm = (z2 + z2bar)/sqrt(2)"""
    basis: ConstrainedBasis = target.basis if isinstance(target, SectorBasis) else target
    if name != "vac" and basis.bc is Boundary.PBC and basis.L % 2:
        raise ValueError(f"Neel states need even L under PBC, got L={basis.L}")

    psi = np.zeros(basis.dim, dtype=complex)
    for word in _named_word(name, basis.L):
        psi[basis.index(word)] = 1.0
    psi /= np.linalg.norm(psi)
    if isinstance(target, SectorBasis):
        psi = project_to_sector(psi, target)
        norm = float(np.linalg.norm(psi))
        if norm < 1e-12:
            raise SymmetryError(f"State {name} has no weight in sector {target.tag}")
        psi /= norm
    return psi
