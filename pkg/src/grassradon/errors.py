"""Exception hierarchy shared by all modules."""


class GrassRadonError(Exception):
    """Base class for library errors."""


class ParameterError(GrassRadonError, ValueError):
    """Invalid dimensions, exponents, budgets or other scalar parameters."""


class UnsupportedFieldError(GrassRadonError):
    """A field cannot be integrated over planes (no finite support, no fast decay)."""


class UnsupportedInputError(GrassRadonError):
    """Input outside the class an operation is defined for."""


class InadmissibleError(GrassRadonError):
    """A witness does not produce a (p, k)-admissible function."""


class UndefinedSlopeError(GrassRadonError):
    """Log-log fit requested on data that vanishes."""


class UnderdeterminedFitError(GrassRadonError):
    """Too few samples for the requested polynomial fit."""


class NoEstimateError(GrassRadonError):
    """No family member survived the domination filter."""


class ConfigError(GrassRadonError):
    """Run configuration that cannot be parsed or validated."""
