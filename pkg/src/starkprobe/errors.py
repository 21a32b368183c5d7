"""Exception hierarchy shared by all starkprobe modules.

The CLI maps these onto exit codes: configuration/domain problems -> 2,
numerical failures -> 3, resource-budget refusals -> 4.
"""


class StarkProbeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(StarkProbeError, ValueError):
    """A parameter or operand is outside the operation's domain."""


class ConfigError(StarkProbeError, ValueError):
    """A run configuration is malformed or inconsistent."""


class NumericError(StarkProbeError, RuntimeError):
    """A numerical routine broke its accuracy or stability contract."""


class ResourceError(StarkProbeError, RuntimeError):
    """A computation was refused because it exceeds the memory budget."""


class EstimationError(NumericError):
    """An estimator could not produce a value from the given data."""
