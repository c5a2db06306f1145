"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration. ``path`` names the offending field when known."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DimensionError(ValueError):
    pass


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class DegenerateError(ValueError):
    """A metric is undefined for the given data (e.g. a single class)."""


class LengthMismatch(ValueError):
    pass
