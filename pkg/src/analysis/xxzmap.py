"""Exact equivalence between the second-order constrained-chain Hamiltonian and XXZ

PBC: 2J K restricted to (K = 0, N up-spins) on L sites equals, up to a
constant, the XXZ chain J[(xx + yy) - zz/2] on L - N sites at K = 0, after
relabeling orbits through the cyclic deletion map.

OBC: J K on (L, N) equals J'[(xx + yy) - zz/2] - (J'/2)(tz_1 + tz_L') +
(J'/2)(11N - 3L - 2) on L' = L - N + 1 sites, J' = J/2, entry by entry
after relabeling through the hard-rod map.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import linalg

from core.basis import (
    Boundary,
    FockState,
    UpPositions,
    constrained_sector_basis,
    cyclic_deletion_map,
    enumerate_basis,
    fixed_n_basis,
    hard_rod_map,
    popcount,
)
from core.errors import BasisError, MappingError
from core.hamiltonians import build_xxz, op_hf2_kernel
from core.symmetry import build_sector_basis, representatives, translate

logger = logging.getLogger(__name__)

MAPPING_TOL = 1e-10


@dataclass(frozen=True)
class MappingReport:
    L: int
    N: int
    bc: Boundary
    dim: int
    max_entry_deviation: float
    spectral_deviation: float
    constant: float
    tolerance: float = MAPPING_TOL

    @property
    def passed(self) -> bool:
        return self.max_entry_deviation < self.tolerance and self.spectral_deviation < self.tolerance

    def as_record(self) -> dict:
        return {
            "L": self.L,
            "N": self.N,
            "bc": self.bc.value,
            "dim": self.dim,
            "max_entry_deviation": self.max_entry_deviation,
            "spectral_deviation": self.spectral_deviation,
            "constant": self.constant,
            "pass": self.passed,
        }


def _movable(state: FockState, bc: Boundary, step: int) -> int:
    L = state.L
    count = 0
    for j in range(L):
        if not state.up(j):
            continue
        ahead = [j + step, j + 2 * step]
        if bc is Boundary.PBC:
            ahead = [a % L for a in ahead]
        elif not 0 <= ahead[0] < L:
            continue
        if all(not (0 <= a < L) or not state.up(a) for a in ahead):
            count += 1
    return count


def flippable_count(state: FockState, bc=Boundary.PBC) -> int:
    """m_0: up-spins that can hop one site to the right"""
    bc = Boundary.parse(bc)
    if not state.is_constrained(bc):
        raise BasisError(f"State {state} violates the constraint")
    return _movable(state, bc, 1)


def flippable_count_left(state: FockState, bc=Boundary.PBC) -> int:
    bc = Boundary.parse(bc)
    if not state.is_constrained(bc):
        raise BasisError(f"State {state} violates the constraint")
    return _movable(state, bc, -1)


def _period(bits: int, L: int) -> int:
    for r in range(1, L + 1):
        if L % r == 0 and int(translate(np.array([bits]), L, r)[0]) == bits:
            return r
    return L


def orbit_hop_element(rep_a: FockState, rep_b: FockState, coefficient: float = 1.0) -> float:
    """<b|H|a> between K = 0 orbit states of coefficient * hopping

    Equals coefficient * m * sqrt(q_b / q_a) with m the number of single hops
    taking rep_a into the orbit of rep_b.
    """
    L = rep_a.L
    target = int(representatives(np.array([rep_b.bits]), L)[0])
    m = 0
    for j in range(L):
        for step in (1, -1):
            k = (j + step) % L
            if rep_a.up(j) and not rep_a.up(k):
                moved = rep_a.bits ^ (1 << j) ^ (1 << k)
                if FockState(moved, L).is_constrained(Boundary.PBC) and int(representatives(np.array([moved]), L)[0]) == target:
                    m += 1
    q_a = L // _period(rep_a.bits, L)
    q_b = L // _period(rep_b.bits, L)
    return coefficient * m * np.sqrt(q_b / q_a)


def _compare(A: np.ndarray, B: np.ndarray, constant: float):
    D = A.shape[0]
    entry = float(np.max(np.abs(A - B - constant * np.eye(D)))) if D else 0.0
    spectral = float(np.max(np.abs(linalg.eigvalsh(A) - linalg.eigvalsh(B) - constant))) if D else 0.0
    return entry, spectral


def verify_pbc_k0(L: int, N: int, J: float, delta: float = -0.5) -> MappingReport:
    """Compare 2J K with XXZ(J, delta) in the K = 0 sectors, fitting the constant"""
    if L > 20:
        raise BasisError(f"Mapping check limited to L <= 20, got {L}")
    if N < 1 or 2 * N >= L:
        raise BasisError(f"Need 1 <= N < L/2, got N={N} for L={L}")

    pxp = build_sector_basis(constrained_sector_basis(L, N, Boundary.PBC), k=0, P=None)
    L_xxz = L - N
    xxz = build_sector_basis(fixed_n_basis(L_xxz, N, Boundary.PBC), k=0, P=None)
    if pxp.dim != xxz.dim:
        raise MappingError(f"K=0 sector sizes differ: {pxp.dim} (L={L}) vs {xxz.dim} (L'={L_xxz})")

    xxz_reps = np.array([o.rep.bits for o in xxz.orbits], dtype=np.int64)
    images = np.array([cyclic_deletion_map(o.rep).bits for o in pxp.orbits], dtype=np.int64)
    image_reps = representatives(images, L_xxz)
    perm = np.searchsorted(xxz_reps, image_reps)
    perm = np.minimum(perm, xxz.dim - 1)
    if np.any(xxz_reps[perm] != image_reps) or np.unique(perm).shape[0] != pxp.dim:
        raise MappingError(f"Orbit relabeling is not a bijection for L={L}, N={N}")

    A = (2 * J * op_hf2_kernel(pxp)).entries
    B = build_xxz(L_xxz, J, delta, Boundary.PBC, target=xxz).entries[np.ix_(perm, perm)]
    constant = float(np.real(np.trace(A) - np.trace(B))) / pxp.dim
    entry, spectral = _compare(A, B, constant)

    report = MappingReport(L, N, Boundary.PBC, pxp.dim, entry, spectral, constant)
    logger.info(f"PBC K=0 mapping L={L} N={N}: D={pxp.dim}, deviation {max(entry, spectral):.2e}")
    return report


def obc_constant(L: int, N: int, J: float) -> float:
    """(J'/2)(11N - 3L - 2) with J' = J/2"""
    return J / 4 * (11 * N - 3 * L - 2)


def verify_obc(L: int, N: int, J: float) -> MappingReport:
    """Entrywise comparison including the explicit constant"""
    if L > 20:
        raise BasisError(f"Mapping check limited to L <= 20, got {L}")
    pxp = constrained_sector_basis(L, N, Boundary.OBC)
    L_xxz = L - N + 1
    xxz = fixed_n_basis(L_xxz, N, Boundary.OBC)
    if pxp.dim != xxz.dim:
        raise MappingError(f"Hard-rod sector sizes differ: {pxp.dim} vs {xxz.dim}")

    images = np.array([hard_rod_map(UpPositions.from_state(s)).to_state().bits for s in pxp], dtype=np.int64)
    perm = xxz.find(images)
    if np.any(perm < 0) or np.unique(perm).shape[0] != pxp.dim:
        raise MappingError(f"Hard-rod relabeling is not a bijection for L={L}, N={N}")

    J_prime = J / 2
    constant = obc_constant(L, N, J)
    A = (J * op_hf2_kernel(pxp)).entries
    B = build_xxz(L_xxz, J_prime, -0.5, Boundary.OBC, h_edge=-J_prime / 2, target=xxz).entries[np.ix_(perm, perm)]
    entry, spectral = _compare(A, B, constant)

    logger.info(f"OBC mapping L={L} N={N}: D={pxp.dim}, deviation {max(entry, spectral):.2e}")
    return MappingReport(L, N, Boundary.OBC, pxp.dim, entry, spectral, constant)


@dataclass
class NormCheckReport:
    L: int
    orbits_checked: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def sector_state_norm_check(L: int) -> NormCheckReport:
    """Block structure of every K = 0 orbit and of its cyclic-deletion image

    An orbit of period R splits the chain into q = L/R identical blocks with
    m1 up-spins each, so N = m1 q; its image has period R - m1 and the same q.
    """
    basis = enumerate_basis(L, Boundary.PBC)
    report = NormCheckReport(L)
    for orbit in build_sector_basis(basis, k=0, P=None).orbits:
        rep, R = orbit.rep, orbit.R
        q = L // R
        N = rep.n_up
        m1 = int(popcount(np.array([rep.bits & ((1 << R) - 1)]))[0])
        image = cyclic_deletion_map(rep)
        L_image = L - N
        R_image = _period(image.bits, L_image)
        report.orbits_checked += 1
        if N != m1 * q:
            report.failures.append(f"{rep}: N={N} but m1*q={m1 * q}")
        if R_image != R - m1 or L_image // R_image != q:
            report.failures.append(f"{rep}: image period {R_image}, expected {R - m1}")
    return report
