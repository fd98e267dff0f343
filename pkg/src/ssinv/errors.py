"""Exception types shared across the package."""


class SSInvError(Exception):
    """Base class for all package errors."""


class DomainError(SSInvError):
    """An argument lies outside the state space or violates an ordering
    constraint (e.g. y > z)."""


class DivergenceError(SSInvError):
    """An integral that must be finite was certified divergent."""


class AdmissibilityError(SSInvError):
    """The diffusion violates the boundary conditions required of an
    inventory model (left boundary attracting, right non-attracting)."""


class ConvergenceError(SSInvError):
    """An iterative routine exhausted its budget without converging."""


class ConfigError(SSInvError):
    """A run configuration document is malformed."""
