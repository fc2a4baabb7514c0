"""Exception types shared across the package."""


class RdfluxError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgument(RdfluxError):
    """An argument is outside the domain an operation supports."""


class DegenerateElement(RdfluxError):
    """Triangle with zero or negative area (after orientation fixing)."""


class DegenerateGeometry(RdfluxError):
    """Geometry request that cannot produce a valid result."""


class InvalidTopology(RdfluxError):
    """Connectivity that does not describe a conforming triangulation."""


class NonPhysicalState(RdfluxError):
    """State with non-positive density or pressure where positivity is required."""


class SingularMatrix(RdfluxError):
    """Dense solve aborted because a pivot fell below the threshold."""


class StagnationFallback(RdfluxError):
    """Upwind star solve hit a singular matrix; caller should switch distribution.

    Carries ``indices``: which triangles of the batch were singular.
    """

    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class ConfigError(RdfluxError):
    """Run configuration that cannot be parsed or validated."""


class Diverged(RdfluxError):
    """Pseudo-time march aborted because the residual blew up."""


class StagnantField(RdfluxError):
    """No node has any inflow, so no stable time step exists."""
