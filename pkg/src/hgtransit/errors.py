"""Exception types shared across the package."""


class StabilityError(ValueError):
    """Resonator geometry lies outside the stable region (xi1*xi2 not in [0, 1])."""


class UndefinedDecompositionError(ValueError):
    """Atom sits on a common node of every family member; no preferred superposition exists."""


class ScheduleError(ValueError):
    """Probe schedule violates a structural constraint."""


class ConfigurationError(ValueError):
    """A referenced mode id or configuration field does not resolve."""


class NoTransitError(RuntimeError):
    """Count record shows no significant transmission dip to fit."""


class ZeroCouplingError(ValueError):
    """Offset lies on the nodal line: zero signal, every on-node offset is equivalent."""


class InfeasibleMeasurementError(ValueError):
    """Measured coupling magnitude exceeds the mode's global maximum beyond uncertainty."""


class UndefinedCorrelationError(ValueError):
    """Autocorrelation of an empty or all-zero count stream is undefined."""


class InsufficientStructureError(RuntimeError):
    """Too few significant correlation maxima to extract a characteristic frequency."""
