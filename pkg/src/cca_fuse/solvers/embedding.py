"""K-component embeddings by repeated one-component fits and deflation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from cca_fuse.core.errors import (
    CcaFuseError,
    ConstantInput,
    FeatureMismatch,
    InvalidParameters,
)
from cca_fuse.core.graph import GraphLaplacian
from cca_fuse.core.matrix import (
    DataMatrix,
    FloatArray,
    covariances,
    frozen,
    require_paired,
)
from cca_fuse.core.metrics import pearson
from cca_fuse.solvers.base import Solver, get_solver
from cca_fuse.solvers.deflation import DeflationMode, deflate_with_norm
from cca_fuse.solvers.gcca import GccaParams
from cca_fuse.solvers.scca import SccaParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmbeddingModel:
    """Fitted direction matrices U (p×K) and V (q×K)."""

    u_matrix: FloatArray = field(repr=False)
    v_matrix: FloatArray = field(repr=False)
    per_component_rho: tuple[float, ...]
    params: GccaParams | SccaParams
    method: str
    feature_names_x: tuple[str, ...] = field(repr=False)
    feature_names_y: tuple[str, ...] = field(repr=False)
    deflation_mode: DeflationMode = DeflationMode.PROJECTIVE
    iterations: tuple[int, ...] = ()
    converged: tuple[bool, ...] = ()
    # Frobenius norm of each deflated Σxy before renormalization (K − 1 entries)
    residual_norms: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        k = len(self.per_component_rho)
        if self.u_matrix.shape != (len(self.feature_names_x), k):
            raise InvalidParameters(f"U has shape {self.u_matrix.shape}, expected p×{k}")
        if self.v_matrix.shape != (len(self.feature_names_y), k):
            raise InvalidParameters(f"V has shape {self.v_matrix.shape}, expected q×{k}")
        if not (np.all(np.isfinite(self.u_matrix)) and np.all(np.isfinite(self.v_matrix))):
            raise InvalidParameters("embedding directions must be finite")
        if k and (
            np.any(np.linalg.norm(self.u_matrix, axis=0) == 0)
            or np.any(np.linalg.norm(self.v_matrix, axis=0) == 0)
        ):
            raise InvalidParameters("embedding directions must be nonzero")

    @property
    def k(self) -> int:
        return len(self.per_component_rho)

    @property
    def p(self) -> int:
        return len(self.feature_names_x)

    @property
    def q(self) -> int:
        return len(self.feature_names_y)


def _null_laplacian(names: tuple[str, ...]) -> GraphLaplacian:
    return GraphLaplacian(np.zeros((len(names), len(names))), names)


def _training_correlation(a: FloatArray, b: FloatArray) -> float:
    try:
        return pearson(a, b)
    except ConstantInput:
        return 0.0


def fit_components(
    x: DataMatrix,
    y: DataMatrix,
    k: int,
    solver: Solver | str,
    params: Any,
    l1: GraphLaplacian | None = None,
    l2: GraphLaplacian | None = None,
    deflation_mode: DeflationMode | str = DeflationMode.PROJECTIVE,
) -> EmbeddingModel:
    """Fit k components, deflating Σxy between them.

    Σx, Σy and Σxy are formed once from the (already preprocessed) data. Each
    component's correlation is measured on the original data, not on the
    deflated covariances. Solver errors carry the failing component index.
    """
    if isinstance(solver, str):
        solver = get_solver(solver)
    mode = DeflationMode(deflation_mode)
    require_paired(x, y)
    x.require_samples(2)
    limit = min(x.n_features, y.n_features, x.n_samples)
    if not 1 <= k <= limit:
        raise InvalidParameters(f"k must lie in [1, {limit}] (min of p, q, n), got {k}")

    if l1 is None:
        if solver.uses_graphs:
            raise InvalidParameters(f"{solver.name} needs a Laplacian for X")
        l1 = _null_laplacian(x.feature_names)
    if l2 is None:
        if solver.uses_graphs:
            raise InvalidParameters(f"{solver.name} needs a Laplacian for Y")
        l2 = _null_laplacian(y.feature_names)

    cov = covariances(x, y)
    u_columns: list[FloatArray] = []
    v_columns: list[FloatArray] = []
    rhos: list[float] = []
    iterations: list[int] = []
    converged: list[bool] = []
    residual_norms: list[float] = []

    for component in range(k):
        try:
            pair = solver.fit_pair(cov, l1, l2, params)
            if component < k - 1:
                deflated = deflate_with_norm(cov.sigma_xy, pair.u, pair.v, mode)
        except CcaFuseError as e:
            e.component = component
            e.add_note(f"while fitting component {component + 1} of {k}")
            raise

        u_columns.append(np.asarray(pair.u))
        v_columns.append(np.asarray(pair.v))
        rhos.append(_training_correlation(pair.u @ x.values, pair.v @ y.values))
        iterations.append(pair.iterations)
        converged.append(pair.converged)
        logger.debug(
            "Component %d: rho=%.4f after %d iterations", component + 1, rhos[-1], pair.iterations
        )
        if component < k - 1:
            cov = cov.with_cross(deflated.sigma_xy)
            residual_norms.append(deflated.residual_norm)

    return EmbeddingModel(
        u_matrix=frozen(np.column_stack(u_columns)),
        v_matrix=frozen(np.column_stack(v_columns)),
        per_component_rho=tuple(rhos),
        params=params,
        method=solver.name,
        feature_names_x=x.feature_names,
        feature_names_y=y.feature_names,
        deflation_mode=mode,
        iterations=tuple(iterations),
        converged=tuple(converged),
        residual_norms=tuple(residual_norms),
    )


def fit_kgcca(
    x: DataMatrix,
    y: DataMatrix,
    l1: GraphLaplacian,
    l2: GraphLaplacian,
    k: int,
    params: GccaParams,
    deflation_mode: DeflationMode | str = DeflationMode.PROJECTIVE,
) -> EmbeddingModel:
    """K-GCCA: k graph-regularized sparse components."""
    return fit_components(x, y, k, "kgcca", params, l1, l2, deflation_mode)


def fit_kscca(
    x: DataMatrix,
    y: DataMatrix,
    k: int,
    c1: float,
    d1: float,
    deflation_mode: DeflationMode | str = DeflationMode.PROJECTIVE,
    **controls: Any,
) -> EmbeddingModel:
    """K-SCCA: k sparse components with ℓ1 bounds c1 and d1."""
    params = SccaParams(c1=c1, d1=d1, **controls)
    return fit_components(x, y, k, "kscca", params, deflation_mode=deflation_mode)


@dataclass(frozen=True, eq=False)
class FusedEmbedding:
    """Z_e = [Uᵀ·X; Vᵀ·Y] (2K×n) with its two halves and the sample ids."""

    z: FloatArray = field(repr=False)
    x_e: FloatArray = field(repr=False)
    y_e: FloatArray = field(repr=False)
    sample_ids: tuple[str, ...]

    @property
    def k(self) -> int:
        return int(self.x_e.shape[0])

    def as_matrix(self) -> DataMatrix:
        """Z_e as a DataMatrix with rows x_e1..x_eK, y_e1..y_eK."""
        names = [f"x_e{i + 1}" for i in range(self.k)] + [f"y_e{i + 1}" for i in range(self.k)]
        return DataMatrix(self.z, names, self.sample_ids)


def _check_features(expected: tuple[str, ...], actual: tuple[str, ...], label: str) -> None:
    if expected == actual:
        return
    for position, (want, got) in enumerate(zip(expected, actual, strict=False)):
        if want != got:
            raise FeatureMismatch(
                f"{label} feature {position} is '{got}', model expects '{want}'"
            )
    raise FeatureMismatch(
        f"{label} has {len(actual)} features, model expects {len(expected)}"
    )


def transform(model: EmbeddingModel, x: DataMatrix, y: DataMatrix) -> FusedEmbedding:
    """Project both modalities and stack the embeddings."""
    _check_features(model.feature_names_x, x.feature_names, "X")
    _check_features(model.feature_names_y, y.feature_names, "Y")
    require_paired(x, y)
    x_e = np.asarray(model.u_matrix).T @ x.values
    y_e = np.asarray(model.v_matrix).T @ y.values
    return FusedEmbedding(
        z=frozen(np.vstack([x_e, y_e])),
        x_e=frozen(x_e),
        y_e=frozen(y_e),
        sample_ids=x.sample_ids,
    )
