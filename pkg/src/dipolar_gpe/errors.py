"""Exception and warning types raised across the package."""


class RepresentationError(ValueError):
    """Field is in the wrong representation or frame for the requested operation."""


class TruncationWarning(UserWarning):
    """Transversal content leaks out of the retained Hermite modes."""


class BoundaryMassError(ValueError):
    """Resampling would wrap non-negligible mass through the periodic boundary."""


class CausticError(ValueError):
    """Requested time lies at or beyond the first caustic of the phase."""


class StepSizeError(ValueError):
    """Time step violates the resolution bound of the selected model."""


class ConfigError(ValueError):
    """Invalid run configuration."""


class SolverFailure(RuntimeError):
    """A solve inside a sweep failed; the message names the ladder point."""


class RegimeWarning(UserWarning):
    """Derived parameters leave the asymptotic regime the model assumes."""
