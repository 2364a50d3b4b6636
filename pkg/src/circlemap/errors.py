"""Exception types raised by the circlemap package."""


class CirclemapError(Exception):
    """Base class for all package-specific errors."""


# --- domain / geometry ---

class DegenerateCurve(CirclemapError):
    """Curve fails the smoothness / speed / self-intersection checks."""


class OverlappingCurves(CirclemapError):
    """Hole curves overlap each other or are not strictly inside the outer curve."""


class PunctureOutsideDomain(CirclemapError):
    """A puncture is not strictly interior to the domain."""


class RhoTooLarge(CirclemapError):
    """Excision radius too large for the puncture configuration."""


# --- boundary data ---

class BadComponentIndex(CirclemapError):
    """Boundary-component index out of range."""


class NonIntegerDegree(CirclemapError):
    """Quadrature of the degree integral is too far from an integer."""


# --- solver ---

class SolverSingular(CirclemapError):
    """Discretized boundary-integral system is numerically singular."""


class IncompatibleNeumannData(CirclemapError):
    """Neumann data violates the flux solvability condition."""


class UnderDeterminedProblem(CirclemapError):
    """Mixed boundary-value problem lacks a normalizing condition."""


class OverDeterminedProblem(CirclemapError):
    """Mixed boundary-value problem has conflicting conditions."""


class TooCloseToBoundary(CirclemapError):
    """Evaluation point inside the near-boundary accuracy band."""


class NoSuchSource(CirclemapError):
    """Field carries no logarithmic source with the requested index."""


class PathTooCloseToSingularity(CirclemapError):
    """Transport path passes too close to a puncture."""


# --- topology / searches ---

class DegreeMismatch(CirclemapError):
    """Boundary data degrees inconsistent with the puncture configuration."""


class SearchRadiusInsufficient(CirclemapError):
    """Enumeration box too small: optimality certificate failed."""


class IncompatibleDegrees(CirclemapError):
    """Degree relation between boundary components and punctures fails."""


# --- oracle ---

class NonMonotoneSequence(CirclemapError):
    """Deflated energy sequence violates the expected monotonicity."""


class RhoTooSmall(CirclemapError):
    """Excision radius below the conditioning guard."""


class ConvergenceOrderError(CirclemapError):
    """Fitted convergence order too low to trust extrapolation."""


# --- cli ---

class SchemaError(CirclemapError):
    """Configuration document does not match the documented schema."""
