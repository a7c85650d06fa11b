"""Validation-set hyperparameter search."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from cca_fuse.core.config import DEFAULT_BOUND_FRACTIONS, DEFAULT_GRID, l1_bound
from cca_fuse.core.errors import (
    AllCandidatesFailed,
    CcaFuseError,
    ConstantInput,
    InvalidParameters,
)
from cca_fuse.core.graph import GraphLaplacian
from cca_fuse.core.matrix import DataMatrix
from cca_fuse.core.metrics import pearson, sum_correlations
from cca_fuse.core.parallel import ordered_map
from cca_fuse.solvers.base import get_solver
from cca_fuse.solvers.deflation import DeflationMode
from cca_fuse.solvers.embedding import fit_components
from cca_fuse.solvers.gcca import GccaParams
from cca_fuse.solvers.scca import SccaParams

logger = logging.getLogger(__name__)

Paired = tuple[DataMatrix, DataMatrix]


class SelectionMetric(Enum):
    VALIDATION_RHO = "validation_rho"
    VALIDATION_SUM_RHO = "validation_sum_rho"


@dataclass(frozen=True)
class GridSpec:
    """Candidate parameter sets for each solver family."""

    gcca: tuple[GccaParams, ...]
    scca: tuple[SccaParams, ...]
    selection_metric: SelectionMetric = SelectionMetric.VALIDATION_RHO

    def __post_init__(self) -> None:
        object.__setattr__(self, "selection_metric", SelectionMetric(self.selection_metric))
        if not self.gcca or not self.scca:
            raise InvalidParameters("every candidate list must be non-empty")

    @classmethod
    def build(
        cls,
        p: int,
        q: int,
        alpha: Sequence[float] = DEFAULT_GRID,
        beta: Sequence[float] = DEFAULT_GRID,
        lam: Sequence[float] = DEFAULT_GRID,
        full: bool = False,
        bound_fractions: Sequence[float] = DEFAULT_BOUND_FRACTIONS,
        selection_metric: SelectionMetric | str = SelectionMetric.VALIDATION_RHO,
        **controls: Any,
    ) -> GridSpec:
        """Grid over α, β, λ (shared by both modalities unless full) and ℓ1 bounds.

        The symmetric default has 4³ = 64 GCCA points; full=True takes the
        product over all six parameters. SCCA bounds are fractions of √p
        and √q, never below 1.
        """
        if not (alpha and beta and lam and bound_fractions):
            raise InvalidParameters("every candidate list must be non-empty")
        if full:
            gcca = [
                GccaParams(a1, b1, l1, a2, b2, l2, **controls)
                for a1, b1, l1, a2, b2, l2 in itertools.product(alpha, beta, lam, repeat=2)
            ]
        else:
            gcca = [
                GccaParams.symmetric(a, b, lam_, **controls)
                for a, b, lam_ in itertools.product(alpha, beta, lam)
            ]
        scca_controls = {key: controls[key] for key in ("tol", "max_iter") if key in controls}
        scca = [
            SccaParams(l1_bound(c, p), l1_bound(d, q), **scca_controls)
            for c, d in itertools.product(bound_fractions, repeat=2)
        ]
        return cls(
            gcca=tuple(sorted(set(gcca))),
            scca=tuple(sorted(set(scca))),
            selection_metric=SelectionMetric(selection_metric),
        )

    @classmethod
    def single(cls, gcca: GccaParams, scca: SccaParams) -> GridSpec:
        return cls(gcca=(gcca,), scca=(scca,))

    def candidates(self, method: str) -> tuple[GccaParams, ...] | tuple[SccaParams, ...]:
        if get_solver(method).uses_graphs:
            return self.gcca
        return self.scca


@dataclass(frozen=True)
class CandidateResult:
    params: GccaParams | SccaParams
    score: float | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.score is None


@dataclass(frozen=True)
class GridSearchResult:
    method: str
    best_params: GccaParams | SccaParams
    best_score: float
    candidates: tuple[CandidateResult, ...]

    @property
    def failures(self) -> tuple[CandidateResult, ...]:
        return tuple(c for c in self.candidates if c.failed)


def validation_score(
    train: Paired,
    val: Paired,
    method: str,
    params: GccaParams | SccaParams,
    l1: GraphLaplacian | None,
    l2: GraphLaplacian | None,
    metric: SelectionMetric = SelectionMetric.VALIDATION_RHO,
    k: int = 1,
    deflation_mode: DeflationMode | str = DeflationMode.PROJECTIVE,
) -> float:
    """Fit on train and score the variates on val."""
    if metric is SelectionMetric.VALIDATION_RHO:
        k = 1
    model = fit_components(train[0], train[1], k, method, params, l1, l2, deflation_mode)
    x_val, y_val = val
    if metric is SelectionMetric.VALIDATION_SUM_RHO:
        return sum_correlations(model, x_val, y_val)
    u = np.asarray(model.u_matrix)[:, 0]
    v = np.asarray(model.v_matrix)[:, 0]
    try:
        return abs(pearson(u @ x_val.values, v @ y_val.values))
    except ConstantInput:
        return 0.0


def grid_search(
    train: Paired,
    val: Paired,
    l1: GraphLaplacian | None,
    l2: GraphLaplacian | None,
    grid: GridSpec,
    method: str,
    k: int = 1,
    workers: int | None = None,
    deflation_mode: DeflationMode | str = DeflationMode.PROJECTIVE,
) -> GridSearchResult:
    """Return the candidate with the highest validation score.

    Candidates are tried in lexicographic parameter order and the first of
    equal scores wins. Failing candidates are kept with their error.
    """
    solver = get_solver(method)
    candidates = grid.candidates(method)

    def evaluate(params: GccaParams | SccaParams) -> CandidateResult:
        try:
            score = validation_score(
                train, val, solver.name, params, l1, l2, grid.selection_metric, k, deflation_mode
            )
        except CcaFuseError as e:
            logger.debug("Candidate %s failed: %s", params, e)
            return CandidateResult(params, None, f"{type(e).__name__}: {e}")
        return CandidateResult(params, score)

    results = ordered_map(evaluate, candidates, workers)

    best: CandidateResult | None = None
    best_score = -np.inf
    for result in results:
        if result.score is not None and result.score > best_score:
            best, best_score = result, result.score
    if best is None:
        first_error = results[0].error if results else "empty grid"
        raise AllCandidatesFailed(
            f"all {len(results)} {solver.name} candidates failed (first: {first_error})"
        )

    failed = sum(1 for r in results if r.failed)
    if failed:
        logger.info("%d of %d %s candidates failed", failed, len(results), solver.name)
    return GridSearchResult(solver.name, best.params, float(best_score), tuple(results))
