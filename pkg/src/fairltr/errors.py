"""Exception types raised by the library."""


class FairltrError(Exception):
    """Base class for all library errors."""


class EmptyCatalogError(FairltrError):
    """An operation was asked to work on zero items."""


class InvalidScoreError(FairltrError):
    """A ranking score vector contained NaN."""


class EmptyHistoryError(FairltrError):
    """An estimate was requested before any interaction was observed."""


class InvalidCatalogError(FairltrError):
    """Catalog violates its invariants (bad group ids, empty group, ...)."""


class UndefinedMetricError(FairltrError):
    """A metric is undefined for the given inputs (e.g. fewer than 2 groups)."""


class PropensityError(FairltrError):
    """A propensity was zero or negative where a positive one is required."""


class ContractError(FairltrError):
    """A caller violated an interface contract (missing features, bad dims)."""


class SolverFailureError(FairltrError):
    """The LP solver hit its iteration cap or an unbounded direction."""


class TrainingError(FairltrError):
    """Model training diverged (loss became NaN/inf)."""


class RatingsParseError(FairltrError):
    """A ratings or polarity file could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SelectionError(FairltrError):
    """Dataset subset selection was impossible (not enough data)."""


class ExperimentError(FairltrError):
    """A trial failed inside an experiment; carries any partial output."""

    def __init__(self, message, partial_rows=None):
        super().__init__(message)
        self.partial_rows = partial_rows or []
