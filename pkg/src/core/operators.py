"""Dense operator container shared by all builders"""

from dataclasses import dataclass
from numbers import Number

import numpy as np

from core.errors import BasisMismatchError, NumericalError

HERMITIAN_TOL = 1e-12
ASYMMETRY_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix of an operator in one named basis"""

    entries: np.ndarray
    basis_tag: str
    hermitian: bool = False

    def __post_init__(self):
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"Operator must be square, got shape {self.entries.shape}")
        if self.hermitian:
            scale = max(1.0, float(np.linalg.norm(self.entries)))
            if np.linalg.norm(self.entries - self.entries.conj().T) >= HERMITIAN_TOL * scale:
                raise NumericalError(f"Operator flagged Hermitian is not ({self.basis_tag})")

    @classmethod
    def hermitian_from(cls, entries: np.ndarray, basis_tag: str, tol: float = ASYMMETRY_TOL) -> "OperatorMatrix":
        """Check the raw asymmetry, then symmetrize"""
        scale = max(1.0, float(np.linalg.norm(entries)))
        asymmetry = float(np.linalg.norm(entries - entries.conj().T))
        if asymmetry >= tol * scale:
            raise NumericalError(f"Asymmetry {asymmetry:.3e} above tolerance for {basis_tag}")
        return cls(0.5 * (entries + entries.conj().T), basis_tag, hermitian=True)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def _check(self, other: "OperatorMatrix"):
        if self.basis_tag != other.basis_tag:
            raise BasisMismatchError(f"Operators live in different bases: {self.basis_tag} vs {other.basis_tag}")

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.entries + other.entries, self.basis_tag, self.hermitian and other.hermitian)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.entries - other.entries, self.basis_tag, self.hermitian and other.hermitian)

    def __mul__(self, scalar: Number) -> "OperatorMatrix":
        hermitian = self.hermitian and np.imag(scalar) == 0
        return OperatorMatrix(self.entries * scalar, self.basis_tag, bool(hermitian))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.entries @ other.entries, self.basis_tag)
        return self.entries @ other

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.basis_tag, self.hermitian)

    def commutator(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.entries @ other.entries - other.entries @ self.entries, self.basis_tag)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.entries @ psi))
