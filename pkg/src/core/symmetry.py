"""Translation and parity sectors of periodic constrained chains"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.basis import Boundary, ConstrainedBasis, FockState
from core.errors import BasisMismatchError, SymmetryError
from core.operators import OperatorMatrix

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
_VANISHING_NORM = 1e-8


def translate(words, L: int, r: int = 1) -> np.ndarray:
    """Cyclic shift moving site j to site j + r"""
    words = np.asarray(words, dtype=np.int64)
    r %= L
    if r == 0:
        return words.copy()
    mask = (1 << L) - 1
    return ((words << r) | (words >> (L - r))) & mask


def representatives(words, L: int) -> np.ndarray:
    """Minimal word of each translation orbit"""
    return np.stack([translate(words, L, r) for r in range(L)]).min(axis=0)


def reflect(words, L: int) -> np.ndarray:
    """Site reversal j -> L - 1 - j"""
    words = np.asarray(words, dtype=np.int64)
    out = np.zeros_like(words)
    for j in range(L):
        out |= ((words >> j) & 1) << (L - 1 - j)
    return out


def _permutation(basis: ConstrainedBasis, images: np.ndarray, name: str) -> np.ndarray:
    perm = basis.find(images)
    if np.any(perm < 0):
        raise SymmetryError(f"Basis {basis.tag} is not closed under {name}")
    return perm


def translation_permutation(basis: ConstrainedBasis, r: int = 1) -> np.ndarray:
    """perm[i] = index of T^r applied to state i"""
    return _permutation(basis, translate(basis.states, basis.L, r), "translation")


def reflection_permutation(basis: ConstrainedBasis) -> np.ndarray:
    return _permutation(basis, reflect(basis.states, basis.L), "reflection")


@dataclass(frozen=True)
class Orbit:
    """Translation orbit with its minimal representative"""

    rep: FockState
    R: int
    p: int
    partner: Optional[int] = None


@dataclass(frozen=True, eq=False)
class _OrbitData:
    reps: np.ndarray
    periods: np.ndarray
    partners: np.ndarray


def _orbit_data(basis: ConstrainedBasis) -> _OrbitData:
    if basis.bc is not Boundary.PBC:
        raise SymmetryError(f"Translation orbits need periodic boundaries, got {basis.bc.value}")
    L = basis.L
    states = basis.states
    shifts = np.stack([translate(states, L, r) for r in range(L)])
    rep_words = shifts.min(axis=0)
    period = L // (shifts == states).sum(axis=0)

    reps, orbit_of = np.unique(rep_words, return_inverse=True)
    periods = np.zeros(reps.shape[0], dtype=np.int64)
    periods[orbit_of.reshape(-1)] = period

    mirrored = reflect(reps, L)
    mirrored_rep = representatives(mirrored, L)
    partners = np.searchsorted(reps, mirrored_rep)
    if np.any(reps[np.minimum(partners, reps.shape[0] - 1)] != mirrored_rep):
        raise SymmetryError(f"Basis {basis.tag} is not closed under reflection")

    return _OrbitData(reps, periods, partners)


def build_orbits(basis: ConstrainedBasis) -> List[Orbit]:
    """Decompose a periodic basis into translation orbits, sorted by representative"""
    data = _orbit_data(basis)
    orbits = []
    for i, (rep, R, partner) in enumerate(zip(data.reps, data.periods, data.partners)):
        p = 1 if partner == i else 2
        orbits.append(Orbit(FockState(int(rep), basis.L), int(R), p, None if p == 1 else int(partner)))
    return orbits


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Orthonormal momentum (and parity) adapted basis

    `column[i]` is the sector vector that full-basis state i contributes to
    (-1 if none) and `amplitude[i]` its coefficient in that vector.
    """

    basis: ConstrainedBasis
    k: int
    P: Optional[int]
    orbits: List[Orbit]
    column: np.ndarray
    amplitude: np.ndarray

    @property
    def L(self) -> int:
        return self.basis.L

    @property
    def bc(self) -> Boundary:
        return self.basis.bc

    @property
    def K(self) -> float:
        return 2 * np.pi * self.k / self.L

    @property
    def dim(self) -> int:
        return len(self.orbits)

    @property
    def tag(self) -> str:
        parity = "none" if self.P is None else f"{self.P:+d}"
        return f"{self.basis.tag}|k={self.k}|P={parity}"

    def back_map(self) -> List[List[Tuple[int, complex]]]:
        entries: List[List[Tuple[int, complex]]] = [[] for _ in range(self.dim)]
        for i in np.nonzero(self.column >= 0)[0]:
            entries[self.column[i]].append((int(i), complex(self.amplitude[i])))
        return entries

    def isometry(self) -> np.ndarray:
        """Dense V with sector vectors as columns (full dim x D_sec)"""
        V = np.zeros((self.basis.dim, self.dim), dtype=complex)
        rows = np.nonzero(self.column >= 0)[0]
        V[rows, self.column[rows]] = self.amplitude[rows]
        return V


def build_sector_basis(basis: ConstrainedBasis, k: int = 0, P: Optional[int] = 1) -> SectorBasis:
    """Symmetry-adapted basis for momentum 2*pi*k/L and optional parity P"""
    L = basis.L
    k %= L
    if P not in (None, 1, -1):
        raise SymmetryError(f"Parity must be +1, -1 or None, got {P}")
    if P is not None and (2 * k) % L != 0:
        raise SymmetryError(f"Parity resolution needs K in {{0, pi}}, got k={k} for L={L}")

    data = _orbit_data(basis)
    n_orbits = data.reps.shape[0]
    allowed = (k * data.periods) % L == 0
    if P is not None:
        # one vector per reflection pair, built from the smaller representative
        allowed &= np.arange(n_orbits) <= data.partners

    candidates = np.nonzero(allowed)[0]
    slot = np.full(n_orbits, -1, dtype=np.int64)
    slot[candidates] = np.arange(candidates.shape[0])
    raw = np.zeros(basis.dim, dtype=complex)
    owner = np.full(basis.dim, -1, dtype=np.int64)
    K = 2 * np.pi * k / L

    reps = data.reps[candidates]
    periods = data.periods[candidates]
    for r in range(L):
        live = r < periods
        if not np.any(live):
            break
        phase = np.exp(-1j * K * r)
        images = translate(reps[live], L, r)
        idx = basis.find(images)
        np.add.at(raw, idx, phase)
        owner[idx] = slot[candidates[live]]
        if P is not None:
            idx = basis.find(reflect(images, L))
            np.add.at(raw, idx, P * phase)
            owner[idx] = slot[candidates[live]]

    norms = np.sqrt(np.bincount(owner[owner >= 0], weights=np.abs(raw[owner >= 0]) ** 2, minlength=candidates.shape[0]))
    kept = norms > _VANISHING_NORM
    new_col = np.full(candidates.shape[0], -1, dtype=np.int64)
    new_col[kept] = np.arange(int(kept.sum()))

    column = np.where(owner >= 0, new_col[np.maximum(owner, 0)], -1)
    amplitude = np.zeros(basis.dim, dtype=complex)
    live = column >= 0
    amplitude[live] = raw[live] / norms[owner[live]]
    amplitude[np.abs(amplitude) < 1e-15] = 0.0

    orbits = []
    for i in candidates[kept]:
        partner = int(data.partners[i])
        p = 1 if partner == i else 2
        orbits.append(Orbit(FockState(int(data.reps[i]), L), int(data.periods[i]), p, None if p == 1 else partner))

    logger.debug(f"Sector {basis.tag} k={k} P={P}: {len(orbits)} states")
    return SectorBasis(basis, k, P, orbits, column, amplitude)


def sector_dimensions(basis: ConstrainedBasis) -> Dict[Tuple[int, Optional[int]], int]:
    """Dimensions of every (k, P) sector; P resolved only at K = 0 and K = pi"""
    dims = {}
    for k in range(basis.L):
        if (2 * k) % basis.L == 0:
            for P in (1, -1):
                dims[(k, P)] = build_sector_basis(basis, k, P).dim
        else:
            dims[(k, None)] = build_sector_basis(basis, k, None).dim
    return dims


def _symmetry_residual(A: np.ndarray, perm: np.ndarray) -> float:
    scale = max(1.0, float(np.linalg.norm(A)))
    return float(np.linalg.norm(A[np.ix_(perm, perm)] - A)) / scale


def project_operator(op: OperatorMatrix, sector: SectorBasis) -> OperatorMatrix:
    """B = V^dagger A V after checking that A respects the sector's symmetries"""
    if op.basis_tag != sector.basis.tag:
        raise BasisMismatchError(f"Operator basis {op.basis_tag} does not match {sector.basis.tag}")
    A = op.entries
    residual = _symmetry_residual(A, translation_permutation(sector.basis))
    if residual > SYMMETRY_TOL:
        raise SymmetryError(f"Operator breaks translation symmetry (residual {residual:.2e})")
    if sector.P is not None:
        residual = _symmetry_residual(A, reflection_permutation(sector.basis))
        if residual > SYMMETRY_TOL:
            raise SymmetryError(f"Operator breaks reflection symmetry (residual {residual:.2e})")

    V = sector.isometry()
    B = V.conj().T @ A @ V
    if op.hermitian:
        return OperatorMatrix.hermitian_from(B, sector.tag, tol=SYMMETRY_TOL)
    return OperatorMatrix(B, sector.tag)


def expand_to_full(v: np.ndarray, sector: SectorBasis) -> np.ndarray:
    """Full-basis vector of a sector vector"""
    v = np.asarray(v)
    if v.shape[0] != sector.dim:
        raise ValueError(f"Vector length {v.shape[0]} does not match sector dimension {sector.dim}")
    psi = np.zeros(sector.basis.dim, dtype=complex)
    live = sector.column >= 0
    psi[live] = sector.amplitude[live] * v[sector.column[live]]
    return psi


def project_to_sector(psi: np.ndarray, sector: SectorBasis) -> np.ndarray:
    """Components of a full-basis vector along the sector vectors"""
    v = np.zeros(sector.dim, dtype=complex)
    live = sector.column >= 0
    np.add.at(v, sector.column[live], sector.amplitude[live].conj() * psi[live])
    return v
