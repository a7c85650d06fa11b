"""Sparse CCA by penalized matrix decomposition (the 1-SCCA baseline).

Alternates soft-thresholded power steps on Σxy, with each threshold chosen
by bisection so the unit-norm direction meets its ℓ1 bound.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from cca_fuse.core.errors import DegenerateSolution, InvalidParameters
from cca_fuse.core.graph import GraphLaplacian
from cca_fuse.core.matrix import CovarianceSet, FloatArray, soft_threshold
from cca_fuse.solvers.base import (
    COLLAPSE_NORM,
    CanonicalPair,
    Solver,
    check_dimensions,
    finish_pair,
    require_positive,
)

logger = logging.getLogger(__name__)

BISECTION_STEPS = 30


@dataclass(frozen=True, order=True)
class SccaParams:
    """ℓ1 bounds c1 (on u) and d1 (on v) plus solver controls."""

    c1: float
    d1: float
    tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self) -> None:
        require_positive("c1", self.c1)
        require_positive("d1", self.d1)
        require_positive("tol", self.tol)
        if self.max_iter < 1:
            raise InvalidParameters(f"max_iter must be at least 1, got {self.max_iter}")


def _unit(w: FloatArray) -> FloatArray | None:
    norm = float(np.linalg.norm(w))
    if norm < COLLAPSE_NORM:
        return None
    return np.asarray(w / norm)


def l1_threshold(a: FloatArray, bound: float) -> float:
    """Smallest Δ (to bisection accuracy) with ‖S(a, Δ)/‖S(a, Δ)‖₂‖₁ ≤ bound.

    Searches [0, ‖a‖∞]; Δ = 0 when the unthresholded direction already fits.
    """
    unit = _unit(a)
    if unit is None or float(np.sum(np.abs(unit))) <= bound:
        return 0.0

    lo, hi = 0.0, float(np.max(np.abs(a)))
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        candidate = _unit(soft_threshold(a, mid))
        if candidate is None or float(np.sum(np.abs(candidate))) <= bound:
            hi = mid
        else:
            lo = mid
    return hi


def sparse_direction(a: FloatArray, bound: float, label: str) -> FloatArray:
    """Unit-norm soft-thresholded a meeting the ℓ1 bound."""
    delta = l1_threshold(a, bound)
    direction = _unit(soft_threshold(a, delta))
    if direction is None:
        raise DegenerateSolution(f"thresholding zeroed direction {label} (bound {bound:g})")
    return direction


def fit_1scca(cov: CovarianceSet, params: SccaParams) -> CanonicalPair:
    """Leading sparse direction pair of Σxy with ‖u‖₁ ≤ c1, ‖v‖₁ ≤ d1.

    Directions are unit ℓ2-norm while iterating and rescaled to unit
    Σ-variance at the end, like fit_1gcca.
    """
    sigma_xy = np.asarray(cov.sigma_xy)
    p, q = sigma_xy.shape
    u = np.full(p, 1.0 / np.sqrt(p))
    v = np.full(q, 1.0 / np.sqrt(q))
    converged = False
    iterations = 0

    for iterations in range(1, params.max_iter + 1):  # noqa: B007
        u_next = sparse_direction(sigma_xy @ v, params.c1, "u")
        v_next = sparse_direction(sigma_xy.T @ u_next, params.d1, "v")
        change = max(float(np.max(np.abs(u_next - u))), float(np.max(np.abs(v_next - v))))
        u, v = u_next, v_next
        if change < params.tol:
            converged = True
            break

    if not converged:
        logger.warning("1-SCCA did not converge within %d iterations", params.max_iter)

    return finish_pair(cov, u, v, iterations, converged)


class SccaSolver(Solver):
    """1-SCCA as the inner solver of K-SCCA; ignores the graphs."""

    @property
    def name(self) -> str:
        return "kscca"

    @property
    def uses_graphs(self) -> bool:
        return False

    def fit_pair(
        self,
        cov: CovarianceSet,
        l1: GraphLaplacian,
        l2: GraphLaplacian,
        params: Any,
    ) -> CanonicalPair:
        if not isinstance(params, SccaParams):
            raise InvalidParameters(f"K-SCCA needs SccaParams, got {type(params).__name__}")
        check_dimensions(cov, l1, l2)
        return fit_1scca(cov, params)

    def params_to_dict(self, params: Any) -> dict[str, Any]:
        return asdict(params)

    def params_from_dict(self, data: dict[str, Any]) -> SccaParams:
        try:
            return SccaParams(**data)
        except TypeError as e:
            raise InvalidParameters(f"invalid SCCA parameters: {e}") from e
