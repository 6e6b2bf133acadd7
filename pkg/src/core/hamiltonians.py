"""Static operators of the driven Rydberg chain and of the XXZ chain

Every operator is a sum over anchor sites j of local operator strings. A
string is a tuple of (offset, symbol) factors acting on site j + offset;
the rightmost factor acts first. Symbols:

    x, y, z   Pauli matrices
    +, -      raising / lowering (+ turns a down-spin up)
    u, d      projectors on up / down

Under OBC a projector that falls off the chain is dropped, while any other
factor falling off the chain removes the whole term. Terms whose image
leaves the working basis are projected out.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.basis import Boundary, ConstrainedBasis, fixed_n_basis, spin_basis
from core.errors import BasisError
from core.operators import OperatorMatrix
from core.symmetry import SectorBasis

logger = logging.getLogger(__name__)

Target = Union[ConstrainedBasis, SectorBasis]

_PROJECTORS = frozenset("ud")
_ADJOINT = {"+": "-", "-": "+"}


@dataclass(frozen=True)
class PhysicalParams:
    """Drive amplitudes and period (hbar = 1)"""

    lambda0: float
    w0: float
    w1: float
    T1: float

    def __post_init__(self):
        if self.lambda0 <= 0 or self.T1 <= 0:
            raise ValueError(f"lambda0 and T1 must be positive, got {self.lambda0}, {self.T1}")
        if self.w0 < 0 or self.w1 < 0:
            raise ValueError(f"w0 and w1 must be non-negative, got {self.w0}, {self.w1}")

    @property
    def gamma(self) -> float:
        return self.lambda0 * self.T1 / 2

    @property
    def omega1(self) -> float:
        return 2 * np.pi / self.T1

    @property
    def z1(self) -> float:
        return 2 * self.lambda0 / self.omega1


@dataclass(frozen=True)
class LocalTerm:
    """coeff * (product of factors), summed over anchors"""

    coeff: complex
    factors: Tuple[Tuple[int, str], ...]
    sites: Optional[Tuple[int, ...]] = None

    def adjoint(self) -> "LocalTerm":
        factors = tuple((offset, _ADJOINT.get(op, op)) for offset, op in reversed(self.factors))
        return LocalTerm(np.conj(self.coeff), factors, self.sites)

    def scaled(self, factor: complex) -> "LocalTerm":
        return LocalTerm(self.coeff * factor, self.factors, self.sites)


def with_adjoint(terms: Iterable[LocalTerm]) -> List[LocalTerm]:
    """terms + H.c."""
    terms = list(terms)
    return terms + [t.adjoint() for t in terms]


def _apply(term: LocalTerm, words: np.ndarray, anchor: int, L: int, bc: Boundary):
    out = words.copy()
    coeff = np.full(words.shape, term.coeff, dtype=complex)
    alive = np.ones(words.shape, dtype=bool)
    for offset, op in reversed(term.factors):
        site = anchor + offset
        if bc is Boundary.PBC:
            site %= L
        elif not 0 <= site < L:
            if op in _PROJECTORS:
                continue
            return None
        bit = (out >> site) & 1
        flip = 1 << site
        if op == "d":
            alive &= bit == 0
        elif op == "u":
            alive &= bit == 1
        elif op == "+":
            alive &= bit == 0
            out ^= flip
        elif op == "-":
            alive &= bit == 1
            out ^= flip
        elif op == "x":
            out ^= flip
        elif op == "y":
            coeff *= np.where(bit == 1, 1j, -1j)
            out ^= flip
        elif op == "z":
            coeff *= np.where(bit == 1, 1.0, -1.0)
        else:
            raise ValueError(f"Unknown operator symbol {op!r}")
    return alive, out, coeff


def _matrix_elements(terms: Sequence[LocalTerm], basis: ConstrainedBasis, words: np.ndarray):
    """(src, dst, value) triples of <dst|O|src> for src among `words`"""
    src_all, dst_all, val_all = [], [], []
    for term in terms:
        anchors = term.sites if term.sites is not None else range(basis.L)
        for anchor in anchors:
            result = _apply(term, words, anchor, basis.L, basis.bc)
            if result is None:
                continue
            alive, out, coeff = result
            src = np.nonzero(alive & (coeff != 0))[0]
            dst = basis.find(out[src])
            keep = dst >= 0
            src_all.append(src[keep])
            dst_all.append(dst[keep])
            val_all.append(coeff[src[keep]])
    if not src_all:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0, dtype=complex)
    return np.concatenate(src_all), np.concatenate(dst_all), np.concatenate(val_all)


def operator_matrix(terms: Sequence[LocalTerm], target: Target, hermitian: bool = True) -> OperatorMatrix:
    """Dense matrix of a term list in a full basis or directly in a sector"""
    if isinstance(target, SectorBasis):
        basis = target.basis
        owned = np.nonzero(target.column >= 0)[0]
        src, dst, val = _matrix_elements(terms, basis, basis.states[owned])
        src = owned[src]
        keep = target.column[dst] >= 0
        src, dst, val = src[keep], dst[keep], val[keep]
        entries = np.zeros((target.dim, target.dim), dtype=complex)
        weights = target.amplitude[dst].conj() * val * target.amplitude[src]
        np.add.at(entries, (target.column[dst], target.column[src]), weights)
    else:
        src, dst, val = _matrix_elements(terms, target, target.states)
        entries = np.zeros((target.dim, target.dim), dtype=complex)
        np.add.at(entries, (dst, src), val)

    if hermitian:
        return OperatorMatrix.hermitian_from(entries, target.tag)
    return OperatorMatrix(entries, target.tag)


def sigma_x_tilde_terms() -> List[LocalTerm]:
    return [LocalTerm(1.0, ((-1, "d"), (0, "x"), (1, "d")))]


def sigma_plus_tilde_terms(coeff: complex = 1.0) -> List[LocalTerm]:
    return [LocalTerm(coeff, ((-1, "d"), (0, "+"), (1, "d")))]


def sigma_z_terms() -> List[LocalTerm]:
    return [LocalTerm(1.0, ((0, "z"),))]


def hf2_kernel_terms() -> List[LocalTerm]:
    """P_{j-1}(s+_j s-_{j+1} + h.c.)P_{j+2} + P_{j-1} sz_j P_{j+1}"""
    hop = LocalTerm(1.0, ((-1, "d"), (0, "+"), (1, "-"), (2, "d")))
    return with_adjoint([hop]) + [LocalTerm(1.0, ((-1, "d"), (0, "z"), (1, "d")))]


def op_identity(target: Target) -> OperatorMatrix:
    return OperatorMatrix(np.eye(target.dim, dtype=complex), target.tag, hermitian=True)


def op_sigma_x_tilde(target: Target) -> OperatorMatrix:
    """Sum_j P_{j-1} sx_j P_{j+1}"""
    return operator_matrix(sigma_x_tilde_terms(), target)


def op_sigma_z_total(target: Target) -> OperatorMatrix:
    return operator_matrix(sigma_z_terms(), target)


def op_hf2_kernel(target: Target) -> OperatorMatrix:
    """Operator multiplying the second-order Floquet coefficient"""
    return operator_matrix(hf2_kernel_terms(), target)


def op_sigma_tilde_rotated(target: Target, phase: float) -> OperatorMatrix:
    """Sum_j (e^{i phase} s~+_j + h.c.)"""
    return operator_matrix(with_adjoint(sigma_plus_tilde_terms(np.exp(1j * phase))), target)


def build_h_ab(target: Target, params: PhysicalParams, a: int, b: int, detuning_sign: int = -1) -> OperatorMatrix:
    """(w0 + b w1) Sum s~x + detuning_sign * a * lambda0 * Sum sz"""
    coupling = params.w0 + b * params.w1
    return coupling * op_sigma_x_tilde(target) + (detuning_sign * a * params.lambda0) * op_sigma_z_total(target)


def xxz_terms(J: float, delta: float, h_edge: float = 0.0, L: Optional[int] = None) -> List[LocalTerm]:
    """J Sum [2(t+ t- + h.c.) + delta tz tz] + h_edge (tz_1 + tz_L)"""
    hop = LocalTerm(2.0 * J, ((0, "+"), (1, "-")))
    terms = with_adjoint([hop]) + [LocalTerm(J * delta, ((0, "z"), (1, "z")))]
    if h_edge:
        if L is None:
            raise ValueError("Boundary field needs the chain length")
        terms.append(LocalTerm(h_edge, ((0, "z"),), sites=(0, L - 1)))
    return terms


def build_xxz(
    L: int,
    J: float,
    delta: float,
    bc=Boundary.PBC,
    h_edge: float = 0.0,
    N: Optional[int] = None,
    target: Optional[Target] = None,
    offset: float = 0.0,
) -> OperatorMatrix:
    """XXZ chain on L unconstrained sites, one N block or all of them"""
    if target is None:
        target = fixed_n_basis(L, N, bc) if N is not None else spin_basis(L, bc)
    H = operator_matrix(xxz_terms(J, delta, h_edge, L), target)
    if offset:
        H = H + offset * op_identity(target)
    return H


def third_charge_xxz_terms(J: float, delta: float) -> List[LocalTerm]:
    """(t_j x t'_{j+1}) . t_{j+2} written with ladder operators"""
    terms = [
        LocalTerm(2j * J * delta, ((0, "+"), (1, "-"), (2, "z"))),
        LocalTerm(2j * J, ((0, "-"), (1, "z"), (2, "+"))),
        LocalTerm(2j * J * delta, ((0, "z"), (1, "+"), (2, "-"))),
    ]
    return with_adjoint(terms)


def build_third_charge_xxz(L: int, J: float, delta: float, N: Optional[int] = None, target: Optional[Target] = None) -> OperatorMatrix:
    if target is None:
        target = fixed_n_basis(L, N, Boundary.PBC) if N is not None else spin_basis(L, Boundary.PBC)
    if target.bc is not Boundary.PBC:
        raise BasisError("The third charge is built for periodic chains")
    return operator_matrix(third_charge_xxz_terms(J, delta), target)


_O1A = (-1.0, ((-1, "d"), (0, "+"), (1, "-"), (2, "d")))
_O1B = (1.0, ((-1, "d"), (0, "+"), (1, "-"), (2, "d"), (3, "u"), (4, "d")))
_O2A = (-1.0, ((-1, "d"), (0, "-"), (1, "d"), (2, "+"), (3, "d")))
_O2B = (1.0, ((-1, "d"), (0, "-"), (1, "+"), (2, "-"), (3, "+"), (4, "d")))
_O3A = (-1.0, ((-1, "d"), (0, "d"), (1, "+"), (2, "-"), (3, "d")))
_O3B = (1.0, ((-1, "d"), (0, "u"), (1, "d"), (2, "+"), (3, "-"), (4, "d")))


def third_charge_pxp_terms(J: float, delta: float) -> List[LocalTerm]:
    """2iJ[delta(O1a + 2 O1b + O3a + O3b) + (O2a + O2b)] + h.c."""
    weighted = [
        (delta, _O1A), (2 * delta, _O1B), (delta, _O3A), (delta, _O3B),
        (1.0, _O2A), (1.0, _O2B),
    ]
    terms = [LocalTerm(2j * J * weight * sign, factors) for weight, (sign, factors) in weighted]
    return with_adjoint(terms)


def build_third_charge_pxp(target: Target, J: float, delta: float) -> OperatorMatrix:
    """Image of the XXZ third charge in the constrained chain"""
    if target.bc is not Boundary.PBC:
        raise BasisError("The constrained third charge is built for periodic chains")
    if target.L < 6:
        raise BasisError(f"Third charge spans six sites, chain has L={target.L}")
    return operator_matrix(third_charge_pxp_terms(J, delta), target)
