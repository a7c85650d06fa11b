"""Shared types and the solver interface for one-component CCA variants."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from cca_fuse.core.errors import DegenerateSolution, DimensionMismatch, InvalidParameters
from cca_fuse.core.graph import GraphLaplacian
from cca_fuse.core.matrix import CovarianceSet, FloatArray, frozen

# Norm below which a direction counts as collapsed
COLLAPSE_NORM = 1e-12


@dataclass(frozen=True, eq=False)
class CanonicalPair:
    """One pair of embedding directions and its training correlation."""

    u: FloatArray = field(repr=False)
    v: FloatArray = field(repr=False)
    rho_train: float
    iterations: int = 0
    converged: bool = True


def canonical_sign(u: FloatArray, v: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Flip both directions so the largest-magnitude entry of u is positive."""
    if u[int(np.argmax(np.abs(u)))] < 0:
        return -u, -v
    return u, v


def metric_normalize(w: FloatArray, sigma: FloatArray, label: str) -> FloatArray:
    """Scale w so that wᵀ·Σ·w = 1."""
    if np.linalg.norm(w) < COLLAPSE_NORM:
        raise DegenerateSolution(f"direction {label} collapsed to zero")
    form = float(w @ sigma @ w)
    if not form > 0 or not np.isfinite(form):
        raise DegenerateSolution(f"direction {label} has non-positive variance {form:g}")
    return np.asarray(w / np.sqrt(form))


def covariance_correlation(cov: CovarianceSet, u: FloatArray, v: FloatArray) -> float:
    """uᵀΣxy·v / √(uᵀΣx·u · vᵀΣy·v), clipped to [−1, 1].

    Equals the Pearson correlation of the variates when the data are centered.
    """
    denom = float(np.sqrt((u @ cov.sigma_x @ u) * (v @ cov.sigma_y @ v)))
    if not denom > 0:
        return 0.0
    return float(np.clip((u @ cov.sigma_xy @ v) / denom, -1.0, 1.0))


def finish_pair(
    cov: CovarianceSet,
    u: FloatArray,
    v: FloatArray,
    iterations: int,
    converged: bool,
) -> CanonicalPair:
    """Final rescaling to unit variance, canonical sign and training correlation."""
    u = metric_normalize(u, cov.sigma_x, "u")
    v = metric_normalize(v, cov.sigma_y, "v")
    u, v = canonical_sign(u, v)
    return CanonicalPair(
        u=frozen(u),
        v=frozen(v),
        rho_train=covariance_correlation(cov, u, v),
        iterations=iterations,
        converged=converged,
    )


def check_dimensions(cov: CovarianceSet, l1: GraphLaplacian, l2: GraphLaplacian) -> None:
    if cov.sigma_xy.shape != (cov.p, cov.q):
        raise DimensionMismatch(
            f"cross-covariance is {cov.sigma_xy.shape}, expected {(cov.p, cov.q)}"
        )
    if l1.size != cov.p:
        raise DimensionMismatch(f"L1 has {l1.size} nodes but X has {cov.p} features")
    if l2.size != cov.q:
        raise DimensionMismatch(f"L2 has {l2.size} nodes but Y has {cov.q} features")


def require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise InvalidParameters(f"{name} must be positive, got {value}")


class Solver(ABC):
    """A one-component solver that K-component fits can deflate around."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Method identifier stored in fitted models."""
        ...

    @property
    def uses_graphs(self) -> bool:
        """Whether fit_pair reads the Laplacians."""
        return True

    @abstractmethod
    def fit_pair(
        self,
        cov: CovarianceSet,
        l1: GraphLaplacian,
        l2: GraphLaplacian,
        params: Any,
    ) -> CanonicalPair:
        """Fit the leading direction pair on the given covariances."""
        ...

    @abstractmethod
    def params_to_dict(self, params: Any) -> dict[str, Any]:
        """Serializable form of this solver's parameters."""
        ...

    @abstractmethod
    def params_from_dict(self, data: dict[str, Any]) -> Any:
        """Inverse of params_to_dict."""
        ...


def get_solver(name: str) -> Solver:
    """Look up a solver by method name."""
    from cca_fuse.solvers.gcca import GccaSolver
    from cca_fuse.solvers.scca import SccaSolver

    solvers: dict[str, type[Solver]] = {
        "kgcca": GccaSolver,
        "gcca": GccaSolver,
        "kscca": SccaSolver,
        "scca": SccaSolver,
    }
    solver_class = solvers.get(name)
    if solver_class is None:
        raise InvalidParameters(f"unknown method '{name}' (choose from {sorted(solvers)})")
    return solver_class()
