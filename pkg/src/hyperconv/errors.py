"""Exception hierarchy shared by all modules."""


class HyperconvError(Exception):
    """Base class for all library errors."""


class DomainError(HyperconvError, ValueError):
    """Argument outside the domain of an operation (e.g. x <= 0)."""


class NonConvergenceError(HyperconvError):
    """An iterative or limiting procedure failed to stabilize."""


class WindowError(HyperconvError):
    """A grid window is too small, or a result window would be too large."""


class ResolutionError(HyperconvError):
    """The requested quantity cannot be resolved on the given grid."""


class StabilityError(HyperconvError):
    """Marching parameters violate the scheme's stability condition."""


class RegimeError(HyperconvError):
    """Model does not belong to the class an operation requires."""


class ConditioningError(HyperconvError):
    """A linear fit is too ill-conditioned to be trusted."""


class NonAsymptoticError(HyperconvError):
    """An asymptotic fit leaves a residual above tolerance."""


class RangeError(HyperconvError, OverflowError):
    """Result would overflow double precision."""


class InvertibilityError(HyperconvError):
    """A Neumann series would not converge."""


class ConsistencyError(HyperconvError):
    """Two independent routes disagree beyond tolerance."""


class ModelFileError(HyperconvError, ValueError):
    """Malformed model definition file."""
