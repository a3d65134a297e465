"""Exception types raised across the package."""


class GraffError(Exception):
    """Base class for all errors raised by graffopt."""


class InvalidInput(GraffError, ValueError):
    pass


class SingularMatrix(GraffError, ArithmeticError):
    pass


class ZeroVector(GraffError, ValueError):
    pass


class RankDeficient(GraffError, ValueError):
    pass


class NotAProjection(GraffError, ValueError):
    pass


class BasePointMismatch(GraffError, ValueError):
    pass


class InfeasiblePoint(GraffError):
    """A matrix lies in Gr(k+1, n+1) but outside the embedded affine Grassmannian.

    The offending orthonormal (or idempotent) matrix is kept in ``raw`` so a
    caller can keep working in the ambient Grassmannian if it wants to.
    """

    def __init__(self, message, raw=None):
        super().__init__(message)
        self.raw = raw


class GeodesicSingular(GraffError):
    """Two points have a principal angle of pi/2; no unique minimizing geodesic."""


class FormulaInconsistent(GraffError):
    """The closed-form projection exponential failed its own sanity check."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class LineSearchFailed(GraffError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OracleInfeasible(GraffError):
    """The closed-form minimizer of a benchmark instance is not in Graff(k, n)."""
