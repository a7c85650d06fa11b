"""Graph-regularized sparse CCA, one component at a time (1-GCCA).

Each half-step solves a reweighted, graph-smoothed linear system:

    u ← (α1·Σx + β1·D_u + λ1·L1)⁻¹ Σxy·v
    v ← (α2·Σy + β2·D_v + λ2·L2)⁻¹ Σxyᵀ·u

with D_u = diag(1/(|u| + ε)) giving an iteratively reweighted ℓ1 penalty.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from cca_fuse.core.errors import InvalidParameters
from cca_fuse.core.graph import GraphLaplacian
from cca_fuse.core.matrix import CovarianceSet, FloatArray, spd_solve
from cca_fuse.solvers.base import (
    CanonicalPair,
    Solver,
    check_dimensions,
    finish_pair,
    metric_normalize,
    require_positive,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class GccaParams:
    """Θ = (α1, β1, λ1, α2, β2, λ2) plus solver controls.

    Ordering compares fields in declaration order, so sorting candidates
    sorts them lexicographically by Θ.
    """

    alpha1: float = 1.0
    beta1: float = 0.1
    lambda1: float = 0.1
    alpha2: float = 1.0
    beta2: float = 0.1
    lambda2: float = 0.1
    epsilon_reweight: float = 1e-6
    tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self) -> None:
        for name in ("alpha1", "beta1", "lambda1", "alpha2", "beta2", "lambda2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParameters(f"{name} must be finite and non-negative, got {value}")
        if self.alpha1 + self.beta1 + self.lambda1 <= 0:
            raise InvalidParameters("alpha1 + beta1 + lambda1 must be positive")
        if self.alpha2 + self.beta2 + self.lambda2 <= 0:
            raise InvalidParameters("alpha2 + beta2 + lambda2 must be positive")
        require_positive("epsilon_reweight", self.epsilon_reweight)
        require_positive("tol", self.tol)
        if self.max_iter < 1:
            raise InvalidParameters(f"max_iter must be at least 1, got {self.max_iter}")

    @property
    def theta(self) -> tuple[float, float, float, float, float, float]:
        return (self.alpha1, self.beta1, self.lambda1, self.alpha2, self.beta2, self.lambda2)

    @classmethod
    def symmetric(cls, alpha: float, beta: float, lam: float, **controls: Any) -> GccaParams:
        """Same (α, β, λ) for both modalities."""
        return cls(alpha, beta, lam, alpha, beta, lam, **controls)


def _half_step(
    base: FloatArray,
    beta: float,
    current: FloatArray,
    epsilon: float,
    rhs: FloatArray,
    sigma: FloatArray,
    label: str,
) -> FloatArray:
    system = base.copy()
    if beta > 0:
        system[np.diag_indices_from(system)] += beta / (np.abs(current) + epsilon)
    return metric_normalize(spd_solve(system, rhs), sigma, label)


def fit_1gcca(
    cov: CovarianceSet,
    l1: GraphLaplacian,
    l2: GraphLaplacian,
    params: GccaParams,
) -> CanonicalPair:
    """Leading graph-regularized sparse direction pair.

    Starts from u = 1/p, v = 1/q and alternates the two reweighted solves.
    Iterates are kept at unit Σ-variance after every half-step, so the
    reweighting and the stopping rule see directions of a fixed scale. Stops
    when neither direction moves by tol in the ∞-norm, or after max_iter.
    """
    check_dimensions(cov, l1, l2)
    p, q = cov.p, cov.q
    sigma_x = np.asarray(cov.sigma_x)
    sigma_y = np.asarray(cov.sigma_y)
    sigma_xy = np.asarray(cov.sigma_xy)

    base_u = params.alpha1 * sigma_x + params.lambda1 * np.asarray(l1.matrix)
    base_v = params.alpha2 * sigma_y + params.lambda2 * np.asarray(l2.matrix)

    u = np.full(p, 1.0 / p)
    v = np.full(q, 1.0 / q)
    eps = params.epsilon_reweight
    converged = False
    iterations = 0

    for iterations in range(1, params.max_iter + 1):  # noqa: B007
        u_next = _half_step(base_u, params.beta1, u, eps, sigma_xy @ v, sigma_x, "u")
        v_next = _half_step(base_v, params.beta2, v, eps, sigma_xy.T @ u_next, sigma_y, "v")
        change = max(float(np.max(np.abs(u_next - u))), float(np.max(np.abs(v_next - v))))
        u, v = u_next, v_next
        if change < params.tol:
            converged = True
            break

    if not converged:
        logger.warning("1-GCCA did not converge within %d iterations", params.max_iter)

    return finish_pair(cov, u, v, iterations, converged)


class GccaSolver(Solver):
    """1-GCCA as the inner solver of K-GCCA."""

    @property
    def name(self) -> str:
        return "kgcca"

    def fit_pair(
        self,
        cov: CovarianceSet,
        l1: GraphLaplacian,
        l2: GraphLaplacian,
        params: Any,
    ) -> CanonicalPair:
        if not isinstance(params, GccaParams):
            raise InvalidParameters(f"K-GCCA needs GccaParams, got {type(params).__name__}")
        return fit_1gcca(cov, l1, l2, params)

    def params_to_dict(self, params: Any) -> dict[str, Any]:
        return asdict(params)

    def params_from_dict(self, data: dict[str, Any]) -> GccaParams:
        try:
            return GccaParams(**data)
        except TypeError as e:
            raise InvalidParameters(f"invalid GCCA parameters: {e}") from e
