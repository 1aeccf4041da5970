"""Exception hierarchy shared across the package."""


class LandauLabError(Exception):
    """Base class for all package errors."""


class ConfigError(LandauLabError, ValueError):
    """Invalid configuration or parameters. Maps to CLI exit code 2."""

    def __init__(self, message, violations=None):
        self.violations = list(violations or [])
        if self.violations:
            message = message + "\n" + "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(message)


class NumericalFailure(LandauLabError):
    """A numerical step failed (NaN, singular system, H-theorem violation).

    ``last_valid`` carries the last accepted state when one exists.
    """

    def __init__(self, message, last_valid=None):
        super().__init__(message)
        self.last_valid = last_valid


class SnapshotError(LandauLabError):
    """Snapshot checksum or grid mismatch. Maps to CLI exit code 4."""


class ChecksumError(SnapshotError):
    """Raw snapshot bytes do not match the recorded CRC-64."""


class GridMismatchError(SnapshotError):
    """Snapshot shape or grid disagrees with its sidecar or with the expected grid."""
