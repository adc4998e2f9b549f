"""Exception types shared across the package."""


class CellThermError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(CellThermError):
    """A physical parameter is non-positive, non-finite, or inconsistent."""


class CalibrationError(CellThermError):
    """An admittance calibration is unusable (non-monotone, out of range)."""


class DataError(CellThermError):
    """Input data is malformed, inconsistent, or insufficient."""


class ConfigError(CellThermError):
    """A configuration value or combination of values is invalid."""


class NumericalError(CellThermError):
    """A numerical operation failed (indefinite covariance, divergence)."""
