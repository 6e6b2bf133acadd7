"""Exception hierarchy for floquet-xxz"""


class FloquetXXZError(Exception):
    """Base class for all errors raised by this package"""

    exit_code = 1


class ConfigError(FloquetXXZError):
    """Invalid run configuration or command-line input"""

    exit_code = 2


class NumericalError(FloquetXXZError):
    """A numerical invariant failed (unitarity, normality, convergence)"""

    exit_code = 3


class BasisError(FloquetXXZError, ValueError):
    """Out-of-range basis request or constraint violation"""


class SymmetryError(FloquetXXZError, ValueError):
    """Symmetry sector cannot be built or an operator breaks the symmetry"""


class BasisMismatchError(FloquetXXZError, ValueError):
    """Binary operation between objects living in different bases"""


class MappingError(FloquetXXZError):
    """PXP to XXZ relabeling is not a bijection"""
