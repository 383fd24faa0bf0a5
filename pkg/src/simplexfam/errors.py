"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SimplexFamError(Exception):
    """Base class for all package-specific errors."""


class DegenerateSimplexError(SimplexFamError, ValueError):
    """A simplex (or distance set) has zero volume where a full-rank one is required."""


class InconsistentDistancesError(SimplexFamError, ValueError):
    """A distance set yields a squared volume below -tolerance."""


class NotPositiveDefiniteError(SimplexFamError, ValueError):
    """A matrix required to be symmetric positive-definite is not."""


class RankDeficientError(SimplexFamError, ValueError):
    """A matrix required to be invertible is numerically singular."""


class DegenerateClassError(SimplexFamError, ValueError):
    """Ratio data does not correspond to any non-degenerate simplex."""


class NotSimilarError(SimplexFamError, ValueError):
    """A configuration is not similar to the reference class.

    Carries the worst ratio deviation seen, for diagnostics.
    """

    def __init__(self, max_deviation: float, tol: float):
        self.max_deviation = max_deviation
        self.tol = tol
        super().__init__(
            f"configuration not similar to reference: max ratio deviation "
            f"{max_deviation:.3e} exceeds tolerance {tol:.3e}"
        )


class BoundaryConfigError(SimplexFamError, ValueError):
    """A configuration with scale 0 (all points coincident) was used where interior is required."""


class ParseError(SimplexFamError, ValueError):
    """Radial-expression source text failed to parse.

    ``pos`` is the 0-based character offset of the failure.
    """

    def __init__(self, message: str, pos: int):
        self.pos = pos
        super().__init__(f"{message} (at position {pos})")


class ChartSingularityError(SimplexFamError, ValueError):
    """Derivative evaluation hit the polar singularity of the spherical chart."""


class DegenerateRadiusError(SimplexFamError, ValueError):
    """Radial function dropped to (or below) the positivity floor at an evaluation point."""

    def __init__(self, u, r: float, t: float | None = None):
        self.u = u
        self.r = r
        self.t = t
        where = f"u={u}" if t is None else f"u={u}, t={t}"
        super().__init__(f"radial value {r:.3e} at or below floor ({where})")


class PositivityViolationError(DegenerateRadiusError):
    """Blended radial family lost positivity at an evaluation point (names u and t)."""


class SolveError(SimplexFamError, RuntimeError):
    """Base class for root-finder failures. Carries the last iterate's diagnostics."""

    def __init__(self, message: str, residual_norm: float | None = None,
                 iterations: int | None = None):
        self.residual_norm = residual_norm
        self.iterations = iterations
        super().__init__(message)


class MaxIterationsError(SolveError):
    """Newton iteration hit the iteration cap without converging."""


class LineSearchStallError(SolveError):
    """Backtracking line search could not reduce the residual norm."""


class CollapseError(SolveError):
    """The scale variable was driven below its floor (configuration collapsing to a point)."""


class ContinuationBreakdownError(SolveError):
    """Homotopy or path continuation failed even at the minimum step size.

    ``last_t`` is the last parameter value with a converged solution and
    ``condition`` the Jacobian condition number there, which together indicate
    a (near-)tangential encounter along the deformation.
    """

    def __init__(self, message: str, last_t: float, condition: float):
        self.last_t = last_t
        self.condition = condition
        super().__init__(message)


class OpenTraceError(SimplexFamError, ValueError):
    """A degree computation was asked to use a trace that never closed."""
