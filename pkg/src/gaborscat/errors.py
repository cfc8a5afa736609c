"""Exception and warning types shared across the solver."""


class GaborscatError(Exception):
    """Base class for all package errors."""


class SingularFrame(GaborscatError):
    """Frame operator is numerically singular; no bounded dual window exists."""


class GridTooCoarse(GaborscatError):
    """Analysis grid spacing too coarse for reliable inner products."""


class QuadratureFailure(GaborscatError):
    """Adaptive quadrature did not converge within its subdivision budget."""


class DomainError(GaborscatError):
    """Argument outside the mathematical domain of the operation."""


class OverflowGuard(GaborscatError):
    """Evaluation would overflow double precision; caller must pre-scale."""


class DimensionMismatch(GaborscatError):
    """Coefficient array dimensions inconsistent with the discretization."""


class SizeCap(GaborscatError):
    """Problem size exceeds the configured dense-solver cap."""


class NonConvergence(GaborscatError):
    """Iterative solver failed to reach tolerance within the iteration cap."""


class GridMismatch(GaborscatError):
    """Field grids do not share a common sampling."""


class SingularMatrix(GaborscatError):
    """Direct solve hit an exactly singular system matrix."""


class ConfigError(GaborscatError):
    """Run configuration failed validation."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class IllConditionedFit(Warning):
    """Dual-window fit normal equations are ill conditioned; truncated-SVD fallback used."""
