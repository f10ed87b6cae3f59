"""Exception and warning types shared across the toolkit."""


class KitampError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(KitampError, ValueError):
    pass


class OutOfRangeError(KitampError, ValueError):
    pass


class FrequencyMismatchError(KitampError, ValueError):
    pass


class PhysicsDomainError(KitampError):
    """Inputs are well formed but physically outside the model's domain."""


class StopBandError(PhysicsDomainError):
    def __init__(self, message, bands=()):
        super().__init__(message)
        self.bands = list(bands)


class StepSizeError(PhysicsDomainError):
    pass


class BelowVacuumError(PhysicsDomainError, ValueError):
    pass


class NonPassiveDataError(PhysicsDomainError, ValueError):
    pass


class SingularFitError(PhysicsDomainError):
    pass


class DataError(KitampError, ValueError):
    pass


class SolverError(KitampError):
    pass


class ResolutionError(KitampError, ValueError):
    pass


class ConfigError(KitampError):
    pass


class BiasWarning(UserWarning):
    """DC bias exceeds the film critical current."""


class RegenerationWarning(UserWarning):
    """Round-trip gain reaches unity; the ripple model no longer applies."""


class NegativeNoiseWarning(UserWarning):
    """A fit returned negative system-added noise."""
