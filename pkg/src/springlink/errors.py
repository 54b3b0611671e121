"""Exception hierarchy shared across the package."""


class SpringlinkError(Exception):
    """Base class for all springlink errors."""


class ParseError(SpringlinkError):
    """Malformed input file; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StructureError(SpringlinkError):
    """Graph violates a structural requirement (kind, partition, connectivity)."""


class ParameterError(SpringlinkError):
    """Invalid parameter value or parameter/input mismatch."""


class SingularityError(SpringlinkError):
    """Coincident points where a force or energy term is undefined."""


class LayoutError(SpringlinkError):
    """Layout optimization failed (non-finite forces, bad init)."""


class SamplingError(SpringlinkError):
    """Negative sampling could not produce the requested pairs."""
