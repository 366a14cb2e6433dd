"""Exception hierarchy shared across the package."""


class FastLightError(Exception):
    """Base class for all package errors."""


class ConfigError(FastLightError):
    """Invalid or unreadable experiment configuration (CLI exit code 2)."""


class SimulationError(FastLightError):
    """Numerical or physical failure during a run (CLI exit code 3)."""


class GridTooCoarseError(SimulationError):
    pass


class PulseExceedsGridError(SimulationError):
    pass


class ZeroPulseError(SimulationError):
    pass


class SizeMismatchError(SimulationError):
    pass


class BandViolationError(SimulationError):
    """Pulse spectrum extends beyond the numerically resolved band of H."""


class ModeError(SimulationError):
    """Operation called on a medium spec of the wrong mode."""


class GainBelowUnityError(SimulationError):
    """Phase-insensitive amplification requires power gain G >= 1."""


class CalibrationError(SimulationError):
    """Gain-line calibration could not meet the requested targets."""


class AnalysisError(SimulationError):
    pass


class MissingSeriesError(ConfigError):
    """A figure was requested from artifacts that lack the required series."""
