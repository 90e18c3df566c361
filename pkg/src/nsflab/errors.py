"""Exception taxonomy shared across the package."""


class NSFError(Exception):
    """Base class for every error raised by nsflab."""


# geometry
class NearZeroVector(NSFError, ValueError):
    pass


class AntipodalPoints(NSFError, ValueError):
    pass


# grid / diagnostics
class KTooLarge(NSFError, ValueError):
    pass


# coupling
class TimeOutOfRange(NSFError, ValueError):
    pass


class NonPositiveCoupling(NSFError, ValueError):
    pass


# flow
class StepRejected(NSFError, RuntimeError):
    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class LeftTube(NSFError, RuntimeError):
    def __init__(self, message, step_index=None, max_rho=None):
        super().__init__(message)
        self.step_index = step_index
        self.max_rho = max_rho


# estimates
class BeyondBlowup(NSFError, ValueError):
    pass


class NoBlowup(NSFError, ValueError):
    pass


class DomainExceeded(NSFError, ValueError):
    pass


class ZeroInitialEnergy(NSFError, ValueError):
    pass


# Gagliardo-Nirenberg probe
class ExponentRelationViolated(NSFError, ValueError):
    pass


class ZeroSection(NSFError, ValueError):
    pass


# configuration
class ConfigError(NSFError, ValueError):
    """Carries every problem found while parsing, each tagged with a line number."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [(None, errors)]
        self.errors = list(errors)
        lines = []
        for lineno, msg in self.errors:
            lines.append(f"line {lineno}: {msg}" if lineno is not None else msg)
        super().__init__("; ".join(lines))


# snapshots
class SnapshotError(NSFError, ValueError):
    pass


class BadMagic(SnapshotError):
    pass


class LengthMismatch(SnapshotError):
    def __init__(self, expected, actual):
        super().__init__(f"payload length mismatch: expected {expected} bytes, got {actual}")
        self.expected = expected
        self.actual = actual


class NormViolation(SnapshotError):
    def __init__(self, index, norm):
        super().__init__(f"point {index} has norm {norm!r}, not unit within 1e-9")
        self.index = index
        self.norm = norm


class CouplingConfigError(ConfigError, NonPositiveCoupling):
    """A configured coupling fails the positivity check."""
