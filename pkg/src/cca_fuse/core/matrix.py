"""Data matrices, covariances and the small linear-algebra kernel the solvers need."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from cca_fuse.core.errors import (
    InvalidMatrix,
    InvalidParameters,
    NotPositiveDefinite,
    SampleMismatch,
    TooFewSamples,
    ZeroVarianceFeature,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

# Trace-scaled diagonal jitter tried, in order, when a factorization fails
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


def frozen(values: ArrayLike) -> FloatArray:
    """Return a read-only float64 copy of values."""
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


class PreprocessMode(Enum):
    """Per-feature preprocessing applied before forming covariances."""

    NONE = "none"
    CENTER = "center"
    ZSCORE = "zscore"


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """A features-by-samples matrix with feature names and sample ids.

    Rows are features, columns are samples. At least two samples are needed
    for any statistic; a single column is accepted so that fitted models can
    embed one sample at a time.
    """

    values: FloatArray
    feature_names: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __init__(
        self,
        values: ArrayLike,
        feature_names: Sequence[str],
        sample_ids: Sequence[str],
    ) -> None:
        array = frozen(values)
        if array.ndim != 2:
            raise InvalidMatrix(f"expected a 2-D matrix, got {array.ndim} dimensions")
        rows, cols = array.shape
        if rows < 1 or cols < 1:
            raise InvalidMatrix(f"matrix must be non-empty, got shape {array.shape}")
        if len(feature_names) != rows:
            raise InvalidMatrix(f"{len(feature_names)} feature names for {rows} rows")
        if len(sample_ids) != cols:
            raise InvalidMatrix(f"{len(sample_ids)} sample ids for {cols} columns")
        if len(set(feature_names)) != rows:
            raise InvalidMatrix("feature names are not unique")
        if len(set(sample_ids)) != cols:
            raise InvalidMatrix("sample ids are not unique")
        if not np.all(np.isfinite(array)):
            raise InvalidMatrix("matrix contains NaN or infinite entries")

        object.__setattr__(self, "values", array)
        object.__setattr__(self, "feature_names", tuple(feature_names))
        object.__setattr__(self, "sample_ids", tuple(sample_ids))

    @property
    def n_features(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[1])

    def with_values(self, values: ArrayLike) -> DataMatrix:
        """Same names and ids, new values."""
        return DataMatrix(values, self.feature_names, self.sample_ids)

    def select_samples(self, indices: Sequence[int] | NDArray[np.intp]) -> DataMatrix:
        """Subset of columns, in the order given."""
        idx = np.asarray(indices, dtype=np.intp)
        return DataMatrix(
            self.values[:, idx],
            self.feature_names,
            [self.sample_ids[i] for i in idx],
        )

    def stack(self, other: DataMatrix) -> DataMatrix:
        """Rows of self above rows of other (early fusion)."""
        require_paired(self, other)
        return DataMatrix(
            np.vstack([self.values, other.values]),
            self.feature_names + other.feature_names,
            self.sample_ids,
        )

    def require_samples(self, minimum: int = 2) -> None:
        if self.n_samples < minimum:
            raise TooFewSamples(f"need at least {minimum} samples, got {self.n_samples}")


def require_paired(x: DataMatrix, y: DataMatrix) -> None:
    """Raise SampleMismatch unless x and y share samples in the same order."""
    if x.n_samples != y.n_samples:
        raise SampleMismatch(f"sample counts differ: {x.n_samples} vs {y.n_samples}")
    if x.sample_ids != y.sample_ids:
        first = next(
            i for i, (a, b) in enumerate(zip(x.sample_ids, y.sample_ids, strict=True)) if a != b
        )
        raise SampleMismatch(
            f"sample ids differ at position {first}: "
            f"'{x.sample_ids[first]}' vs '{y.sample_ids[first]}'"
        )


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-feature statistics learned on one partition and applied to others."""

    mode: PreprocessMode
    mean: FloatArray = field(repr=False)
    scale: FloatArray = field(repr=False)

    def apply(self, m: DataMatrix) -> DataMatrix:
        if self.mode is PreprocessMode.NONE:
            return m
        if m.n_features != self.mean.shape[0]:
            raise InvalidMatrix(
                f"scaler fitted on {self.mean.shape[0]} features, got {m.n_features}"
            )
        return m.with_values((m.values - self.mean[:, None]) / self.scale[:, None])


def fit_scaler(m: DataMatrix, mode: PreprocessMode) -> Scaler:
    """Learn centering (and z-scoring) statistics from m."""
    p = m.n_features
    if mode is PreprocessMode.NONE:
        return Scaler(mode, frozen(np.zeros(p)), frozen(np.ones(p)))

    m.require_samples(2)
    mean = m.values.mean(axis=1)
    if mode is PreprocessMode.CENTER:
        return Scaler(mode, frozen(mean), frozen(np.ones(p)))

    constant = np.ptp(m.values, axis=1) == 0
    if np.any(constant):
        raise ZeroVarianceFeature(m.feature_names[int(np.argmax(constant))])
    std = m.values.std(axis=1, ddof=1)
    return Scaler(mode, frozen(mean), frozen(std))


def preprocess(m: DataMatrix, mode: PreprocessMode | str) -> DataMatrix:
    """Center or z-score every feature row (sample sd, n-1 denominator)."""
    mode = PreprocessMode(mode)
    if mode is PreprocessMode.NONE:
        return m
    return fit_scaler(m, mode).apply(m)


@dataclass(frozen=True, eq=False)
class CovarianceSet:
    """Unscaled second moments X·Xᵀ, Y·Yᵀ and X·Yᵀ."""

    sigma_x: FloatArray = field(repr=False)
    sigma_y: FloatArray = field(repr=False)
    sigma_xy: FloatArray = field(repr=False)

    @property
    def p(self) -> int:
        return int(self.sigma_x.shape[0])

    @property
    def q(self) -> int:
        return int(self.sigma_y.shape[0])

    def with_cross(self, sigma_xy: ArrayLike) -> CovarianceSet:
        """Same auto-covariances, replaced cross-covariance (used by deflation)."""
        return CovarianceSet(self.sigma_x, self.sigma_y, frozen(sigma_xy))


def covariances(x: DataMatrix, y: DataMatrix) -> CovarianceSet:
    """Σx = X·Xᵀ, Σy = Y·Yᵀ, Σxy = X·Yᵀ with no 1/n factor."""
    require_paired(x, y)
    xv, yv = x.values, y.values
    sigma_x = xv @ xv.T
    sigma_y = yv @ yv.T
    # Products of a matrix with its own transpose are symmetric up to rounding
    sigma_x = (sigma_x + sigma_x.T) / 2
    sigma_y = (sigma_y + sigma_y.T) / 2
    return CovarianceSet(frozen(sigma_x), frozen(sigma_y), frozen(xv @ yv.T))


def spd_solve(a: ArrayLike, b: ArrayLike) -> FloatArray:
    """Solve a·x = b for symmetric positive definite a via Cholesky.

    Falls back to a + δI for δ in JITTER_LADDER·trace(a)/n before giving up.
    """
    matrix = np.asarray(a, dtype=np.float64)
    rhs = np.asarray(b, dtype=np.float64)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or rhs.shape[0] != n:
        raise InvalidMatrix(f"incompatible system shapes {matrix.shape} and {rhs.shape}")

    try:
        factor = scipy.linalg.cho_factor(matrix, lower=True, check_finite=False)
        return np.asarray(scipy.linalg.cho_solve(factor, rhs, check_finite=False))
    except np.linalg.LinAlgError:
        pass

    base = float(np.trace(matrix)) / n
    if not base > 0:
        raise NotPositiveDefinite(f"system matrix has non-positive trace {base * n:g}")

    identity = np.eye(n)
    for step in JITTER_LADDER:
        delta = step * base
        try:
            factor = scipy.linalg.cho_factor(
                matrix + delta * identity, lower=True, check_finite=False
            )
        except np.linalg.LinAlgError:
            continue
        logger.debug("Cholesky succeeded with jitter %.3g", delta)
        return np.asarray(scipy.linalg.cho_solve(factor, rhs, check_finite=False))

    raise NotPositiveDefinite(
        f"{n}x{n} system is not positive definite after jitter up to {JITTER_LADDER[-1] * base:g}"
    )


def soft_threshold(v: ArrayLike, delta: float) -> FloatArray:
    """sign(v)·max(|v| − delta, 0), elementwise."""
    if delta < 0:
        raise InvalidParameters(f"threshold must be non-negative, got {delta}")
    vec = np.asarray(v, dtype=np.float64)
    return np.asarray(np.sign(vec) * np.maximum(np.abs(vec) - delta, 0.0))
