"""Exception types shared across the package."""


class DegenerateFoldError(ValueError):
    """A fold contains observations from one arm only; the caller must
    resample or enlarge the fold before fitting per-arm smoothers."""


class DegenerateStatisticError(ArithmeticError):
    """The variance proxy of a test statistic is exactly zero."""


class NumericalError(ArithmeticError):
    """A numerical quantity that must be finite came out NaN or infinite."""


class CsvParseError(ValueError):
    """Malformed covariate CSV; message carries the offending row/column."""
