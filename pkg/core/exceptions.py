"""
Exception hierarchy for steinlab.

Numeric operations raise these; the experiment runner catches them per task,
logs them and records the failure without aborting the whole run.
"""


class SteinLabError(Exception):
    """Base exception for all steinlab errors."""
    pass


class MeasureError(SteinLabError):
    """Raised when a measure cannot be built or used."""
    pass


class UnknownMeasureError(MeasureError):
    """Raised when a catalog name is not known."""
    pass


class ParameterOutOfRangeError(MeasureError):
    """Raised when catalog parameters fall outside their validity range."""
    pass


class NoSamplerError(MeasureError):
    """Raised when sampling is requested from a measure without a sampler."""
    pass


class SamplerError(MeasureError):
    """Raised when a sampler fails, e.g. rejection acceptance is too low."""
    pass


class DivergentMomentError(MeasureError):
    """Raised when a requested moment is infinite or does not stabilise."""
    pass


class SingularCovarianceError(MeasureError):
    """Raised when standardisation meets a singular covariance."""
    pass


class MomentBudgetError(MeasureError):
    """Raised when an operation needs more finite moments than a measure has."""
    pass


class QuadratureError(SteinLabError):
    """Raised when an integral misses its tolerance after maximal refinement."""
    pass


class TruncationError(QuadratureError):
    """Raised when the support truncation sweep does not converge."""
    pass


class DivergentIntegralError(QuadratureError):
    """Raised when an integrand is not integrable against the measure."""
    pass


class KernelUndefinedError(SteinLabError):
    """Raised when a closed-form Stein kernel does not exist on the grid."""
    pass


class CenteringError(SteinLabError):
    """Raised when a measure (or reference potential) is not centered."""
    pass


class GridMismatchError(SteinLabError):
    """Raised when tabulated objects live on different grids."""
    pass


class IllConditionedBasisError(SteinLabError):
    """Raised when the Gram matrix of a polynomial basis is numerically singular."""
    pass


class SolverError(SteinLabError):
    """Raised when a Galerkin system cannot be solved even with a ridge."""
    pass


class DegenerateFormError(SteinLabError):
    """Raised when a quadratic form needed by a spectral estimate is degenerate."""
    pass


class SpectralError(SteinLabError):
    """Raised when an eigenvalue computation fails or does not converge."""
    pass


class NormalizationError(SteinLabError):
    """Raised when a measure violates the second-moment normalisation."""
    pass


class IsotropyError(SteinLabError):
    """Raised when an experiment needs an isotropic measure and gets another."""
    pass


class AliasingError(SteinLabError):
    """Raised when a convolved density leaks mass past its grid."""
    pass


class FisherConsistencyError(SteinLabError):
    """Raised when the Fisher information of a grid density is not grid-stable."""
    pass


class InsufficientSamplesError(SteinLabError):
    """Raised when a Monte Carlo estimate is requested with too few samples."""
    pass


class ConfigError(SteinLabError):
    """Base class for experiment configuration errors."""
    pass


class ConfigParseError(ConfigError):
    """Raised when an experiment file cannot be parsed."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    """Raised when a parsed experiment file is semantically invalid."""
    pass


class ReportError(SteinLabError):
    """Raised when a report cannot be written."""
    pass
