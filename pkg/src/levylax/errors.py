"""Exception types shared across the library and the CLI."""


class LevyLaxError(Exception):
    """Base class for all library errors."""


class ConfigError(LevyLaxError):
    """A run-config file is missing a field or holds an invalid value.

    ``field`` names the offending config entry so CLI messages can point at it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class DomainTooSmallError(LevyLaxError):
    """The truncated box cannot absorb an operator's reach.

    Raised when a kernel truncation radius exceeds half the box width, or when
    the trusted region empties before an iteration completes.  ``step`` is the
    1-based step index at which the region died (0 if before the first step).
    """

    def __init__(self, message: str, step: int = 0):
        self.step = step
        super().__init__(message)


class GridTooCoarseError(LevyLaxError):
    """inverse_modulus resolved to 0 at the requested epsilon."""


class FastPathUnavailableError(LevyLaxError):
    """The fast sup-convolution path does not support this cost kind or dimension."""


class EnumerationBudgetError(LevyLaxError):
    """An exact enumeration would exceed its configured budget."""
