"""Exception hierarchy.

``ConfigError`` and ``DataError`` map to distinct CLI exit codes.
"""


class TravelSampleError(Exception):
    """Base class for all package errors."""

    kind = "error"


class ConfigError(TravelSampleError, ValueError):
    kind = "config"


class DataError(TravelSampleError, ValueError):
    kind = "data"


class DomainError(ConfigError):
    """An argument lies outside its mathematical domain."""

    kind = "domain"


class DegenerateInputError(DataError):
    """Input has no dispersion, too few values, or a zero mean."""

    kind = "degenerate"


class DegeneratePopulationError(DegenerateInputError):
    """No between- or within-stratum dispersion; any sample suffices."""

    kind = "degenerate-population"


class ValidationError(DataError):
    kind = "validation"


class SchemaError(DataError):
    kind = "schema"


class ConsistencyError(TravelSampleError, RuntimeError):
    """An internal self-check failed."""

    kind = "consistency"
