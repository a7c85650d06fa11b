"""Classical (optionally ridge-regularized) CCA by whitening and SVD.

Used as the reference the iterative solvers are checked against.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from cca_fuse.core.errors import ConstantInput, InvalidParameters, SingularCovariance
from cca_fuse.core.matrix import CovarianceSet, DataMatrix, FloatArray, covariances, frozen
from cca_fuse.core.metrics import pearson
from cca_fuse.solvers.base import CanonicalPair, canonical_sign, metric_normalize

# Relative eigenvalue floor below which a covariance counts as rank-deficient
RANK_TOL = 1e-12


def _inverse_sqrt(sigma: FloatArray, ridge: float, label: str) -> FloatArray:
    eigenvalues, vectors = scipy.linalg.eigh(sigma + ridge * np.eye(sigma.shape[0]))
    top = max(float(eigenvalues[-1]), 0.0)
    if ridge == 0 and (top == 0 or float(eigenvalues[0]) <= RANK_TOL * top):
        raise SingularCovariance(f"{label} is rank-deficient; pass a positive ridge")
    if ridge > 0:
        # Rounding can push a rank-deficient spectrum slightly below the ridge
        eigenvalues = np.maximum(eigenvalues, ridge)
    return np.asarray((vectors / np.sqrt(eigenvalues)) @ vectors.T)


def _whitened_svd(
    cov: CovarianceSet, ridge: float
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray, FloatArray]:
    if ridge < 0:
        raise InvalidParameters(f"ridge must be non-negative, got {ridge}")
    kx = _inverse_sqrt(np.asarray(cov.sigma_x), ridge, "Σx")
    ky = _inverse_sqrt(np.asarray(cov.sigma_y), ridge, "Σy")
    left, singular, right_t = scipy.linalg.svd(kx @ cov.sigma_xy @ ky, full_matrices=False)
    return kx, ky, left, singular, right_t


def _variate_correlation(a: FloatArray, b: FloatArray) -> float:
    try:
        return pearson(a, b)
    except ConstantInput:
        return 0.0


def classical_cca(x: DataMatrix, y: DataMatrix, ridge: float = 0.0) -> CanonicalPair:
    """Leading canonical pair of (Σx + ridge·I)^{-1/2} Σxy (Σy + ridge·I)^{-1/2}."""
    x.require_samples(2)
    cov = covariances(x, y)
    kx, ky, left, _, right_t = _whitened_svd(cov, ridge)
    u = metric_normalize(kx @ left[:, 0], np.asarray(cov.sigma_x), "u")
    v = metric_normalize(ky @ right_t[0], np.asarray(cov.sigma_y), "v")
    u, v = canonical_sign(u, v)
    rho = _variate_correlation(u @ x.values, v @ y.values)
    return CanonicalPair(u=frozen(u), v=frozen(v), rho_train=rho)


def canonical_correlations(
    x: DataMatrix, y: DataMatrix, ridge: float = 0.0, k: int | None = None
) -> FloatArray:
    """The leading k canonical correlations (all of them when k is None).

    With centered data and ridge = 0 these are the singular values of the
    whitened cross-covariance.
    """
    x.require_samples(2)
    _, _, _, singular, _ = _whitened_svd(covariances(x, y), ridge)
    if k is not None:
        singular = singular[:k]
    return frozen(singular)
