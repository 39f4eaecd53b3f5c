"""Exception types shared across the package."""


class InfNepError(Exception):
    """Base class for numerical failures reported by this package."""


class DomainMismatchError(InfNepError, ValueError):
    """Operands live on different domains or breakpoints."""


class ResolutionError(InfNepError):
    """Adaptive construction did not resolve within the size cap."""


class RankDeficiencyError(InfNepError):
    """Requested rank exceeds the detected numerical rank."""

    def __init__(self, rank, message=None):
        super().__init__(message or f"numerical rank is {rank}")
        self.rank = rank


class CountTooLargeError(RankDeficiencyError):
    """The contour encloses fewer eigenvalues than requested."""


class SingularSystemError(InfNepError):
    """A linear system was numerically singular (e.g. z is an eigenvalue)."""


class NodeOnSpectrumError(SingularSystemError):
    """A quadrature node sits on the spectrum; rotate or move the contour."""

    def __init__(self, node, message=None):
        super().__init__(message or f"quadrature node {node} is (numerically) an eigenvalue; rotate the nodes")
        self.node = node


class ConvergenceError(InfNepError):
    """An iteration failed to converge."""


class UnsupportedError(InfNepError):
    """The requested operation is not available for this problem."""
