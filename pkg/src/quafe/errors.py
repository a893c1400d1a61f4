"""Exception hierarchy shared by all quafe modules."""


class QuafeError(Exception):
    """Base class for every error raised by quafe."""


class DomainError(QuafeError, ValueError):
    """An argument lies outside the domain of a physical formula."""


class TruncationError(QuafeError):
    """A Fock-space cutoff is too small for the requested photon statistics."""


class CalibrationError(QuafeError):
    """Per-mode coupling strengths could not be calibrated."""


class CircuitError(QuafeError):
    """Malformed circuit topology or an impossible post-selection."""


class HeraldLimitError(QuafeError):
    """Energy-resolved enumeration would exceed the configured size limit."""


class ConfigError(QuafeError):
    """A configuration file is missing, malformed, or inconsistent."""
