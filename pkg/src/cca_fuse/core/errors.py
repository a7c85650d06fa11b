"""Exception hierarchy for cca-fuse.

Every error carries the exit code of its category so the runner can map
failures to the documented CLI exit codes without inspecting messages.
"""

from __future__ import annotations

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class CcaFuseError(Exception):
    """Base class for all cca-fuse errors."""

    exit_code: int = EXIT_DATA

    def __init__(self, message: str = "") -> None:
        super().__init__(message)
        # Set by K-component fits and pipeline stages respectively
        self.component: int | None = None
        self.stage: str | None = None


# Usage errors (exit 1)


class UsageError(CcaFuseError):
    """Invalid invocation or configuration."""

    exit_code = EXIT_USAGE


class InvalidParameters(UsageError):
    """Hyperparameters violate their invariants."""


class ConfigError(UsageError):
    """Configuration file could not be read or has invalid values."""


# Data errors (exit 2)


class DataError(CcaFuseError):
    """Input data is malformed or inconsistent."""

    exit_code = EXIT_DATA


class InvalidMatrix(DataError):
    """A data matrix violates its invariants (non-finite, duplicate names...)."""


class ZeroVarianceFeature(DataError):
    """A feature row is constant where a nonzero variance is required."""

    def __init__(self, feature_name: str) -> None:
        super().__init__(f"feature '{feature_name}' has zero variance")
        self.feature_name = feature_name


class SampleMismatch(DataError):
    """Two modalities do not share the same samples in the same order."""


class FeatureMismatch(DataError):
    """Data features do not match the features a model was fitted on."""


class NegativeWeight(DataError):
    """An edge weight is negative."""


class InvalidEdge(DataError):
    """An edge is a self-loop or has a non-finite weight."""


class TooFewSamples(DataError):
    """Not enough samples for the requested operation or partition."""


class SingleClassTraining(DataError):
    """Training labels contain a single class."""


class SingleClassInput(DataError):
    """Evaluation labels contain a single class, so AUC is undefined."""


class DimensionMismatch(DataError):
    """Array dimensions are inconsistent."""


class ConstantInput(DataError):
    """A correlation input is constant."""


class ZeroVector(DataError):
    """A vector that must be nonzero is zero."""


class ZeroDenominator(DataError):
    """A ratio metric has a vanishing denominator."""


class MalformedFile(DataError):
    """An input file does not follow its documented format."""


class MissingLabels(DataError):
    """Samples without labels were passed to a supervised stage."""


# Numerical failures (exit 3)


class NumericalError(CcaFuseError):
    """A numerical routine failed."""

    exit_code = EXIT_NUMERICAL


class NotPositiveDefinite(NumericalError):
    """A linear system matrix is not positive definite, even with jitter."""


class SingularCovariance(NumericalError):
    """A covariance matrix is rank-deficient and no ridge was given."""


class DegenerateSolution(NumericalError):
    """An embedding direction collapsed to the zero vector."""


class ZeroMatrix(NumericalError):
    """Deflation removed everything from the cross-covariance."""


class AllCandidatesFailed(NumericalError):
    """Every hyperparameter candidate of a grid search failed."""
