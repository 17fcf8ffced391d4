"""Exception hierarchy shared by the freqkey modules."""


class FreqKeyError(Exception):
    """Base class for all package-specific errors."""


class InvalidStateError(FreqKeyError, ValueError):
    """A state construction request is physically ill-posed."""


class NormalizationError(InvalidStateError):
    """Amplitudes do not satisfy the unit-norm condition (never silently fixed)."""


class BasisMismatchError(FreqKeyError, ValueError):
    """Two states do not share the same (omega0, omega1) basis."""


class ConfigurationError(FreqKeyError, ValueError):
    """A configuration value is malformed or inconsistent (CLI exit code 2)."""


class DegenerateFilterError(FreqKeyError, ValueError):
    """Spectral filter windows are ill-posed (overlapping or zero-width bands)."""


class RegimeViolationError(FreqKeyError, RuntimeError):
    """A hard timing-regime violation: some scale ordering ratio exceeds 1 (CLI exit code 3)."""
