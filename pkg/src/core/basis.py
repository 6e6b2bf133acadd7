"""Constrained (Rydberg-blockade) Fock bases and hard-rod bijections

States are stored as integer bit words with the least-significant bit on
site 0. Site indices are 0-based everywhere except in UpPositions, which
uses the 1-based positions x_1 < ... < x_N of the bijection formulas.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import numpy as np

from core.errors import BasisError

logger = logging.getLogger(__name__)

MAX_SITES = 32

_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


class Boundary(str, Enum):
    """Boundary condition of the chain"""

    OBC = "obc"
    PBC = "pbc"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, Boundary):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise BasisError(f"Unknown boundary condition: {value!r}") from None


def fibonacci(n: int) -> int:
    """F(n) with F(1) = F(2) = 1"""
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def lucas(n: int) -> int:
    """Lucas number L(n) with L(0) = 2, L(1) = 1"""
    return fibonacci(n - 1) + fibonacci(n + 1)


def popcount(words: np.ndarray) -> np.ndarray:
    """Number of set bits of each word (words < 2**32)"""
    words = np.asarray(words, dtype=np.int64)
    count = np.zeros(words.shape, dtype=np.int64)
    for shift in range(0, MAX_SITES, 8):
        count += _POPCOUNT8[(words >> shift) & 0xFF]
    return count


def is_constrained(bits: int, L: int, bc: Boundary) -> bool:
    """True if no two neighbouring sites are both up"""
    if bits & (bits >> 1):
        return False
    if Boundary.parse(bc) is Boundary.PBC and L > 1:
        return not ((bits & 1) and (bits >> (L - 1)) & 1)
    return True


@dataclass(frozen=True)
class FockState:
    """A single configuration of L spins"""

    bits: int
    L: int

    @property
    def n_up(self) -> int:
        return bin(self.bits).count("1")

    def up(self, site: int) -> bool:
        return bool((self.bits >> (site % self.L)) & 1)

    def is_constrained(self, bc: Boundary) -> bool:
        return is_constrained(self.bits, self.L, bc)

    @classmethod
    def from_string(cls, text: str) -> "FockState":
        """Parse '0101..' or '↓↑↓↑..' with site 0 first"""
        symbols = text.replace("↑", "1").replace("↓", "0")
        bits = sum(1 << j for j, c in enumerate(symbols) if c == "1")
        return cls(bits, len(symbols))

    def __str__(self) -> str:
        return "".join("1" if self.up(j) else "0" for j in range(self.L))


@dataclass(frozen=True, eq=False)
class ConstrainedBasis:
    """Sorted list of basis words with exact index lookup

    The same container carries the unconstrained fixed-N bases of the XXZ
    chain; `constrained` tells them apart and enters the basis tag.
    """

    L: int
    bc: Boundary
    states: np.ndarray
    n_up: Optional[int] = None
    constrained: bool = True

    def __post_init__(self):
        self.states.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.states.shape[0])

    @property
    def tag(self) -> str:
        kind = "pxp" if self.constrained else "free"
        sector = "all" if self.n_up is None else str(self.n_up)
        return f"{kind}:{self.bc.value}:L={self.L}:N={sector}"

    def __len__(self) -> int:
        return self.dim

    def __iter__(self) -> Iterator[FockState]:
        for bits in self.states:
            yield FockState(int(bits), self.L)

    def state(self, i: int) -> FockState:
        return FockState(int(self.states[i]), self.L)

    def find(self, words) -> np.ndarray:
        """Vectorized lookup; -1 where a word is not in the basis"""
        words = np.asarray(words, dtype=np.int64)
        if self.dim == 0:
            return np.full(words.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self.states, words)
        pos = np.minimum(pos, self.dim - 1)
        return np.where(self.states[pos] == words, pos, -1).astype(np.int64)

    def index(self, bits: int) -> int:
        i = int(self.find(np.array([bits]))[0])
        if i < 0:
            raise BasisError(f"Word {bits:#b} is not in basis {self.tag}")
        return i

    def popcounts(self) -> np.ndarray:
        return popcount(self.states)


def _check_length(L: int):
    if not 2 <= L <= MAX_SITES:
        raise BasisError(f"L must be in [2, {MAX_SITES}], got {L}")


def _constrained_words(L: int, bc: Boundary) -> np.ndarray:
    # grow the chain site by site, splitting words by the state of the last site
    end_down = np.array([0], dtype=np.int64)
    end_up = np.array([1], dtype=np.int64)
    for j in range(1, L):
        end_down, end_up = np.concatenate([end_down, end_up]), end_down | (1 << j)
    words = np.concatenate([end_down, end_up])
    if bc is Boundary.PBC:
        wrap = ((words & 1) == 1) & (((words >> (L - 1)) & 1) == 1)
        words = words[~wrap]
    return np.sort(words)


def enumerate_basis(L: int, bc) -> ConstrainedBasis:
    """All constrained words of an L-site chain, sorted ascending"""
    _check_length(L)
    bc = Boundary.parse(bc)
    words = _constrained_words(L, bc)

    expected = fibonacci(L + 2) if bc is Boundary.OBC else lucas(L)
    if words.shape[0] != expected:
        raise BasisError(f"Enumerated {words.shape[0]} states for L={L} {bc.value}, expected {expected}")

    logger.debug(f"Constrained basis L={L} {bc.value}: {expected} states")
    return ConstrainedBasis(L, bc, words)


def constrained_sector_basis(L: int, N: int, bc) -> ConstrainedBasis:
    """Constrained basis restricted to N up-spins"""
    _check_length(L)
    if not 0 <= N <= (L + 1) // 2:
        raise BasisError(f"N must be in [0, ceil(L/2)] for L={L}, got {N}")
    full = enumerate_basis(L, bc)
    words = full.states[full.popcounts() == N].copy()
    return ConstrainedBasis(L, full.bc, words, n_up=N)


def enumerate_sector_N(L: int, N: int, bc) -> List[FockState]:
    """Constrained states with exactly N up-spins, generated through the hard-rod unmap"""
    _check_length(L)
    bc = Boundary.parse(bc)
    if not 0 <= N <= (L + 1) // 2:
        raise BasisError(f"N must be in [0, ceil(L/2)] for L={L}, got {N}")

    states = []
    for ys in itertools.combinations(range(1, L - N + 2), N):
        xs = hard_rod_unmap(UpPositions(ys, L - N + 1))
        state = xs.to_state()
        if bc is Boundary.OBC or state.is_constrained(bc):
            states.append(state)
    return sorted(states, key=lambda s: s.bits)


def fixed_n_basis(L: int, N: int, bc) -> ConstrainedBasis:
    """Unconstrained spin-1/2 basis with N up-spins (XXZ side)"""
    if not 1 <= L <= MAX_SITES:
        raise BasisError(f"L must be in [1, {MAX_SITES}], got {L}")
    if not 0 <= N <= L:
        raise BasisError(f"N must be in [0, {L}], got {N}")
    words = np.array(
        sorted(sum(1 << j for j in sites) for sites in itertools.combinations(range(L), N)),
        dtype=np.int64,
    )
    return ConstrainedBasis(L, Boundary.parse(bc), words, n_up=N, constrained=False)


@dataclass(frozen=True)
class UpPositions:
    """1-based up-spin positions x_1 < ... < x_N on an L-site chain"""

    xs: Tuple[int, ...]
    L: int

    @property
    def N(self) -> int:
        return len(self.xs)

    @classmethod
    def from_state(cls, state: FockState) -> "UpPositions":
        return cls(tuple(j + 1 for j in range(state.L) if state.up(j)), state.L)

    def to_state(self) -> FockState:
        return FockState(sum(1 << (x - 1) for x in self.xs), self.L)

    def is_hard_core(self, bc=Boundary.OBC) -> bool:
        xs = self.xs
        if any(not 1 <= x <= self.L for x in xs):
            return False
        if any(b - a < 2 for a, b in zip(xs, xs[1:])):
            return False
        if Boundary.parse(bc) is Boundary.PBC and len(xs) > 1:
            return xs[0] + self.L - xs[-1] >= 2
        return True


def hard_rod_map(s: UpPositions) -> UpPositions:
    """y_i = x_i - (i-1): hard-core OBC chain of L sites to a free chain of L-N+1"""
    if not s.is_hard_core(Boundary.OBC):
        raise BasisError(f"Positions {s.xs} violate the hard-core constraint on L={s.L}")
    return UpPositions(tuple(x - i for i, x in enumerate(s.xs)), s.L - s.N + 1)


def hard_rod_unmap(s: UpPositions) -> UpPositions:
    """x_i = y_i + (i-1), inverse of hard_rod_map"""
    if any(b <= a for a, b in zip(s.xs, s.xs[1:])):
        raise BasisError(f"Positions {s.xs} are not strictly increasing")
    return UpPositions(tuple(y + i for i, y in enumerate(s.xs)), s.L + s.N - 1)


def cyclic_deletion_map(state: FockState) -> FockState:
    """Delete the down-spin cyclically left of every up-spin (PBC)

    Returns an unconstrained word on L - N sites; surviving sites keep their
    cyclic order starting from the lowest surviving site index.
    """
    if not state.is_constrained(Boundary.PBC):
        raise BasisError(f"State {state} violates the cyclic constraint")
    L = state.L
    deleted = {(j - 1) % L for j in range(L) if state.up(j)}
    kept = [j for j in range(L) if j not in deleted]
    bits = sum(1 << k for k, j in enumerate(kept) if state.up(j))
    return FockState(bits, len(kept))


def spin_basis(L: int, bc) -> ConstrainedBasis:
    """Full unconstrained 2**L spin-1/2 basis (all N blocks)"""
    if not 1 <= L <= 24:
        raise BasisError(f"Full spin basis limited to L <= 24, got {L}")
    return ConstrainedBasis(L, Boundary.parse(bc), np.arange(1 << L, dtype=np.int64), constrained=False)
