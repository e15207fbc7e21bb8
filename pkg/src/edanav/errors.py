"""Shared exception types."""


class DegenerateInputError(ValueError):
    """Raised when an input is structurally valid but numerically degenerate
    (constant trace fed to min-max normalization, rank-deficient design
    matrix with zero ridge, empty dataset, ...)."""


class ConfigError(ValueError):
    """Raised for an unusable run configuration: unknown sections or keys,
    values that fail to parse, or values outside their documented bounds."""


class FileFormatError(ValueError):
    """Raised when an on-disk artifact does not match its documented format.

    Carries the offending path and, where meaningful, the 1-based line number.
    """

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")
