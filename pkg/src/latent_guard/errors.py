"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Raised when an array does not have the shape an operation requires."""

    def __init__(self, what: str, expected, actual):
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{what}: expected shape {self.expected}, got {self.actual}")


class IdxFormatError(ValueError):
    """Raised when an IDX file is malformed (bad magic, truncation, count mismatch)."""
