"""Exception hierarchy shared across the package."""


class StarkstripError(Exception):
    """Base class for all package-specific failures."""


class CurvatureEvaluationError(StarkstripError):
    """Curvature model evaluated too close to a pole of its analytic extension."""


class GeometryError(StarkstripError):
    """Geometric admissibility violated (metric degenerate or d*sup|gamma| >= 1)."""


class QuadratureError(StarkstripError):
    """An improper or adaptive integral failed to converge to the requested tolerance."""


class RegimeError(StarkstripError):
    """Field direction incompatible with the requested operation or too close to a boundary case."""


class DiscretizationError(StarkstripError):
    """Grid inadmissible for the requested assembly."""


class SolverError(StarkstripError):
    """Eigenvalue or linear solve failed to converge."""


class ConfigError(StarkstripError):
    """Run configuration malformed or inconsistent."""


class FitError(StarkstripError):
    """Not enough usable data for a requested fit."""
