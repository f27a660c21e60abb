"""Exception types raised across the package."""
from __future__ import annotations


class GazeSteerError(Exception):
    """Base class for all package errors."""


class DegenerateHeading(GazeSteerError, ValueError):
    """Heading has no horizontal component."""


class InvalidSpec(GazeSteerError, ValueError):
    pass


class NonMonotonicTrace(GazeSteerError, ValueError):
    pass


class EmptyLog(GazeSteerError, ValueError):
    pass


class InsufficientData(GazeSteerError, ValueError):
    pass


class DegenerateData(GazeSteerError, ValueError):
    """All pooled observations are identical, so ranks carry no information."""


class AllZeroDifferences(GazeSteerError, ValueError):
    pass


class OutOfRange(GazeSteerError, ValueError):
    pass


class ConfigError(GazeSteerError, ValueError):
    pass


class FixtureMissing(GazeSteerError, FileNotFoundError):
    pass
