"""Exception types shared across the package and mapped to CLI exit codes."""


class ConfigParseError(Exception):
    """Raised when a config document cannot be read or decoded (CLI exit 2)."""


class ConfigValidationError(Exception):
    """Raised when a parsed config violates the schema (CLI exit 3).

    Carries the offending field path so error messages can name it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DenseCapError(RuntimeError):
    """Raised when a dense decomposition would exceed the size cap (CLI exit 4)."""
