"""Acceptance suite behind `floquet-xxz verify`

The fast level runs every check at reduced chain lengths; the full level
uses the desk-scale sizes.
"""

import logging
import time
from dataclasses import dataclass
from math import comb
from typing import Callable, Dict, List

import numpy as np
from scipy.special import jn_zeros

from analysis.observables import (
    CHARGE_TOL,
    COE_R,
    POISSON_R,
    coe_phases,
    commutator_norm,
    entanglement_entropy,
    initial_state,
    level_spacing_stats,
    magnetization_series,
    poisson_phases,
    sff_averaged,
    sff_dip_time,
)
from analysis.xxzmap import verify_obc, verify_pbc_k0
from core.basis import (
    Boundary,
    FockState,
    UpPositions,
    constrained_sector_basis,
    cyclic_deletion_map,
    enumerate_basis,
    hard_rod_map,
    hard_rod_unmap,
    is_constrained,
)
from core.config import RunConfig
from core.hamiltonians import (
    PhysicalParams,
    build_third_charge_pxp,
    build_third_charge_xxz,
    build_xxz,
    op_hf2_kernel,
    op_sigma_z_total,
)
from core.symmetry import build_orbits, build_sector_basis, representatives, translate
from experiments.runner import ExperimentRunner
from floquet.drive import SquareAsymmetric, SquareTwoTone, floquet_log_hamiltonian, floquet_operator, floquet_spectrum
from floquet.fpt import (
    asym_coefficients,
    fpt_for,
    hf1_cosine,
    hf1_square,
    oracle_coefficient,
)

logger = logging.getLogger(__name__)

LAMBDA0 = 20.0
CROSSOVER_RATIOS = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
MONOTONE_SLACK = 0.02
SFF_WINDOW = 20
SFF_SPREAD = 0.05


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _square(gamma_over_pi: float, w: float = 1.0) -> SquareTwoTone:
    """Square two-tone drive with w0 = w1 = w at gamma = gamma_over_pi * pi"""
    T1 = 2 * np.pi * gamma_over_pi / LAMBDA0
    return SquareTwoTone(PhysicalParams(LAMBDA0, w, w, T1))


def _spectrum(protocol, target):
    return floquet_spectrum(floquet_operator(protocol, target), protocol.params.T1)


def _k0_sector(L: int, P=1):
    return build_sector_basis(enumerate_basis(L, Boundary.PBC), k=0, P=P)


def check_combinatorics(level: str) -> str:
    for L in range(2, 15):
        for bc in (Boundary.OBC, Boundary.PBC):
            brute = [w for w in range(1 << L) if is_constrained(w, L, bc)]
            if not np.array_equal(enumerate_basis(L, bc).states, np.array(brute)):
                raise AssertionError(f"basis mismatch L={L} {bc.value}")
        for N in range(0, (L + 1) // 2 + 1):
            if constrained_sector_basis(L, N, Boundary.OBC).dim != comb(L - N + 1, N):
                raise AssertionError(f"OBC sector count L={L} N={N}")
    if constrained_sector_basis(6, 2, Boundary.OBC).dim != 10:
        raise AssertionError("L=6, N=2 OBC table has the wrong size")
    return "dimensions match brute force for L <= 14"


def check_bijections(level: str) -> str:
    L_max = 12 if level == "full" else 10
    for L in range(2, L_max + 1):
        for state in enumerate_basis(L, Boundary.OBC):
            xs = UpPositions.from_state(state)
            if hard_rod_unmap(hard_rod_map(xs)) != xs:
                raise AssertionError(f"hard-rod round trip failed for {state}")
    for L in range(3, L_max + 1):
        for orbit in build_orbits(enumerate_basis(L, Boundary.PBC)):
            images = set()
            for r in range(orbit.R):
                bits = int(translate(np.array([orbit.rep.bits]), L, r)[0])
                image = cyclic_deletion_map(FockState(bits, L))
                images.add(int(representatives(np.array([image.bits]), image.L)[0]))
            if len(images) != 1:
                raise AssertionError(f"orbit of {orbit.rep} splits under cyclic deletion")
    return f"exhaustive for L <= {L_max}"


def check_first_order(level: str) -> str:
    for m in range(1, 5):
        c = hf1_square(PhysicalParams(LAMBDA0, 1.0, 1.0, 2 * np.pi * m / LAMBDA0)).coefficient
        if abs(c) > 1e-12:
            raise AssertionError(f"first order at gamma={m}pi is {c:.2e}")
    worst = 0.0
    for g in np.linspace(0.1, 4.5, 50) * np.pi:
        protocol = _square(g / np.pi)
        analytic = fpt_for(protocol, 1).amplitude
        worst = max(worst, abs(analytic - oracle_coefficient(protocol, 1)))
    if worst > 1e-9:
        raise AssertionError(f"first order differs from quadrature by {worst:.2e}")
    for eta in jn_zeros(0, 3):
        c = hf1_cosine(PhysicalParams(LAMBDA0, 1.0, 1.0, np.pi * eta / LAMBDA0)).coefficient
        if abs(c) > 1e-10:
            raise AssertionError(f"cosine first order {c:.2e} at z1={eta:.6f}")
    return f"max analytic/oracle deviation {worst:.2e}"


def check_second_order(level: str) -> str:
    L = 14 if level == "full" else 10
    target = _k0_sector(L)

    def residuals(w):
        protocol = _square(2.0, w)
        H_num = floquet_log_hamiltonian(_spectrum(protocol, target))
        H1 = fpt_for(protocol, 1).matrix(target)
        H2 = fpt_for(protocol, 2).matrix(target)
        return (H_num - H2).norm() / H2.norm(), (H_num - H1 - H2).norm()

    rel, res_full = residuals(1.0)
    _, res_half = residuals(0.5)
    ratio = res_full / res_half
    if rel >= 0.15:
        raise AssertionError(f"relative deviation {rel:.3f} at L={L}")
    if not 6 <= ratio <= 10:
        raise AssertionError(f"halving ratio {ratio:.2f} outside [6, 10]")
    return f"L={L}: relative deviation {rel:.3f}, halving ratio {ratio:.2f}"


def check_mapping(level: str) -> str:
    sizes = (8, 10, 12, 14, 16) if level == "full" else (8, 10)
    count = 0
    for L in sizes:
        for N in range(1, (L + 1) // 2):
            if 2 * N >= L:
                continue
            report = verify_pbc_k0(L, N, 1.0)
            if not report.passed:
                raise AssertionError(f"PBC mapping failed at L={L}, N={N}: {report.as_record()}")
            count += 1
    for L in range(2, (15 if level == "full" else 11)):
        for N in range(0, (L + 1) // 2 + 1):
            report = verify_obc(L, N, 1.0)
            if not report.passed:
                raise AssertionError(f"OBC mapping failed at L={L}, N={N}: {report.as_record()}")
            count += 1
    for L_xxz in range(3, (13 if level == "full" else 9)):
        H = build_xxz(L_xxz, 1.0, -0.5)
        C = build_third_charge_xxz(L_xxz, 1.0, -0.5)
        norm = commutator_norm(H, C)
        if norm >= CHARGE_TOL:
            raise AssertionError(f"|[H, C3]| = {norm:.2e} at L'={L_xxz}")
    return f"{count} sectors verified"


def check_level_statistics(level: str) -> str:
    rng = np.random.default_rng(7)
    r_poisson = level_spacing_stats(poisson_phases(5000, rng)).mean
    r_coe = level_spacing_stats(coe_phases(2000 if level == "full" else 800, rng)).mean
    if abs(r_poisson - POISSON_R) > 0.012 or abs(r_coe - COE_R) > 0.03:
        raise AssertionError(f"sampler calibration off: Poisson {r_poisson:.3f}, COE {r_coe:.3f}")

    L = 22 if level == "full" else 16
    target = _k0_sector(L)
    r_special = level_spacing_stats(_spectrum(_square(2.0), target)).mean
    r_generic = level_spacing_stats(_spectrum(_square(1.9), target)).mean
    if r_special >= r_generic - 0.05:
        raise AssertionError(f"no dip at gamma=2pi: r={r_special:.3f} vs {r_generic:.3f}")
    if level == "full" and not (0.35 <= r_special <= 0.44 and 0.47 <= r_generic <= 0.55):
        raise AssertionError(f"r values out of window: {r_special:.3f}, {r_generic:.3f}")
    return f"L={L}: r(2pi)={r_special:.3f}, r(1.9pi)={r_generic:.3f}"


def check_entanglement(level: str) -> str:
    L = 18 if level == "full" else 12
    target = _k0_sector(L)

    def spread(gamma_over_pi):
        spectrum = _spectrum(_square(gamma_over_pi), target)
        S = np.array([entanglement_entropy(spectrum.vectors[:, i], target) for i in range(spectrum.dim)])
        D = S.shape[0]
        return float(np.std(S[D // 4: D - D // 4]))

    ratio = spread(2.0) / spread(1.99)
    if ratio < 2:
        raise AssertionError(f"entropy spread ratio {ratio:.2f} < 2")
    return f"L={L}: spread ratio {ratio:.2f}"


def check_dynamics(level: str) -> str:
    L = 18 if level == "full" else 12
    target = _k0_sector(L)
    Z = op_sigma_z_total(target)
    n = np.unique(np.round(np.logspace(0, 4, 41)).astype(np.int64))
    spectrum = _spectrum(_square(2.0), target)
    for name in ("vac", "afm"):
        psi0 = initial_state(name, target)
        series = magnetization_series(spectrum, psi0, Z, np.concatenate([[0], n]), L)
        drift = float(np.max(np.abs(series.values - series.values[0])))
        if drift >= 0.02:
            raise AssertionError(f"{name} start drifts by {drift:.3f} at gamma=2pi")
    psi0 = initial_state("vac", target)
    series = magnetization_series(_spectrum(_square(1.9), target), psi0, Z, n, L)
    if np.max(np.abs(series.values + 1.0)) < 0.02:
        raise AssertionError("vac start stays pinned at gamma=1.9pi")

    crossover = ExperimentRunner(RunConfig(
        experiment="crossover", L=18 if level == "full" else 14, gamma_over_pi=1.0,
        axis="lambda_over_w1", values=CROSSOVER_RATIOS, initial_state="vac",
    )).crossover()
    _, m_st, m_ite = np.array(crossover.table.rows, dtype=float).T
    # rows ascend in lambda0/w1; the distance to the ITE value grows along them
    distance = np.abs(m_st - m_ite)
    if np.any(np.diff(distance) < -MONOTONE_SLACK):
        raise AssertionError(f"steady state is not monotone in lambda0/w1: {np.round(m_st, 3).tolist()}")
    if distance[0] >= 0.1:
        raise AssertionError(f"M_st={m_st[0]:.3f} at lambda0/w1={CROSSOVER_RATIOS[0]} is not within 0.1 of {m_ite[0]:.3f}")
    return f"L={L}: pinned at 2pi, melts at 1.9pi; crossover reaches {m_st[0]:.3f} (ITE {m_ite[0]:.3f})"


def check_third_charge(level: str) -> str:
    L = 18 if level == "full" else 12
    target = build_sector_basis(enumerate_basis(L, Boundary.PBC), k=0, P=None)
    C3 = build_third_charge_pxp(target, 1.0, -0.5)
    norms = {}
    for g in (2.0, 1.95):
        H_F = floquet_log_hamiltonian(_spectrum(_square(g), target))
        norms[g] = commutator_norm(H_F, C3)
    kernel = commutator_norm(op_hf2_kernel(target), C3)
    if norms[2.0] >= 0.2 * norms[1.95]:
        raise AssertionError(f"no commutator dip: {norms[2.0]:.3e} vs {norms[1.95]:.3e}")
    if kernel >= CHARGE_TOL:
        raise AssertionError(f"|[K, C3]| = {kernel:.2e} at L={L}")
    return f"L={L}: ratio {norms[2.0] / norms[1.95]:.3f}; |[K, C3]| = {kernel:.2e}"


def check_sff(level: str) -> str:
    L = 18 if level == "full" else 12
    target = _k0_sector(L)
    n = np.arange(0, 2 * 10**4 + 1)
    late = n >= 10**4
    dips = {}
    for label, gamma_over_pi in (("2pi", 2.0), ("2pi/3", 2.0 / 3)):
        protocol = _square(gamma_over_pi)
        window = protocol.params.w0 * (1 + SFF_SPREAD * np.linspace(-1, 1, SFF_WINDOW))
        series = sff_averaged(protocol, target, n, window)
        if abs(float(series.values[0]) - 1.0) > 1e-12:
            raise AssertionError(f"K(0) != 1 at gamma={label}")
        plateau = float(np.mean(series.values[late])) * target.dim
        if abs(plateau - 1) > 0.2:
            raise AssertionError(f"late-time D*K = {plateau:.3f} at gamma={label}")
        dips[label] = sff_dip_time(series, target.dim)

    if dips["2pi/3"] is None:
        raise AssertionError("no dip at gamma=2pi/3")
    if dips["2pi"] is not None and dips["2pi"] <= dips["2pi/3"]:
        raise AssertionError(f"dip time {dips['2pi']} at 2pi does not exceed {dips['2pi/3']} at 2pi/3")
    return f"L={L}: dip times {dips['2pi']} (2pi) and {dips['2pi/3']} (2pi/3)"


def check_asymmetric(level: str) -> str:
    x = 10
    params = PhysicalParams(LAMBDA0, 1.0, 0.0, x * np.pi / LAMBDA0)
    for m2 in range(1, x):
        c = asym_coefficients(params, m2 / x).c1
        if max(abs(c[1]), abs(c[-1])) > 1e-12:
            raise AssertionError(f"C1 does not vanish at p={m2 / x}")
    if level != "full":
        return "C1 vanishes at all special duty fractions"

    target = _k0_sector(18)
    w = LAMBDA0 / 20.0

    def r_at(px):
        protocol = SquareAsymmetric(PhysicalParams(LAMBDA0, w, 0.0, params.T1), px / x)
        return level_spacing_stats(_spectrum(protocol, target)).mean

    r = {px: r_at(px) for px in (1.0, 1.15, 2.0, 2.15, 3.0)}
    if not (r[1.0] < 0.45 and r[1.15] > 0.48):
        raise AssertionError(f"r(px=1)={r[1.0]:.3f}, r(px=1.15)={r[1.15]:.3f}")
    if not (r[2.0] < 0.45 and r[2.0] < r[2.15] and r[2.0] < r[3.0]):
        raise AssertionError(f"no local minimum at px=2: {r[2.0]:.3f} vs {r[2.15]:.3f} (2.15), {r[3.0]:.3f} (3)")
    return ", ".join(f"r(px={px:g})={value:.3f}" for px, value in r.items())


CHECKS: Dict[str, Callable[[str], str]] = {
    "combinatorics": check_combinatorics,
    "bijections": check_bijections,
    "first order": check_first_order,
    "second order": check_second_order,
    "xxz mapping": check_mapping,
    "level statistics": check_level_statistics,
    "entanglement": check_entanglement,
    "dynamics": check_dynamics,
    "third charge": check_third_charge,
    "spectral form factor": check_sff,
    "asymmetric drive": check_asymmetric,
}


def run_acceptance(level: str = "fast", names=None) -> List[CheckResult]:
    results = []
    for name, check in CHECKS.items():
        if names and name not in names:
            continue
        start = time.perf_counter()
        try:
            detail = check(level)
            passed = True
        except AssertionError as e:
            detail, passed = str(e), False
        elapsed = time.perf_counter() - start
        logger.info(f"{name}: {'PASS' if passed else 'FAIL'} ({elapsed:.1f}s) {detail}")
        results.append(CheckResult(name, passed, detail, elapsed))
    return results
