"""Tests for the validation-set grid search."""

from __future__ import annotations

import numpy as np
import pytest

from cca_fuse.core.errors import AllCandidatesFailed
from cca_fuse.core.graph import GraphLaplacian, complete_graph_laplacian, laplacian_from_data
from cca_fuse.core.matrix import DataMatrix
from cca_fuse.experiments.grid import GridSpec, SelectionMetric, grid_search, validation_score
from cca_fuse.solvers.gcca import GccaParams
from cca_fuse.solvers.scca import SccaParams

from .conftest import PairFactory

Paired = tuple[DataMatrix, DataMatrix]


def _train_val(latent_pair: PairFactory, seed: int) -> tuple[Paired, Paired]:
    x, y = latent_pair(seed, n=400)
    train = (x.select_samples(range(300)), y.select_samples(range(300)))
    val = (x.select_samples(range(300, 400)), y.select_samples(range(300, 400)))
    return train, val


def test_build_default_sizes() -> None:
    grid = GridSpec.build(10, 10)
    assert len(grid.gcca) == 64
    assert len(grid.scca) == 16
    assert list(grid.gcca) == sorted(grid.gcca)
    assert all(params.alpha1 == params.alpha2 for params in grid.gcca)


def test_build_full_grid() -> None:
    assert len(GridSpec.build(10, 10, full=True).gcca) == 4096


def test_build_deduplicates() -> None:
    grid = GridSpec.build(4, 4, alpha=[1.0, 1.0], beta=[0.1], lam=[0.1], bound_fractions=[0.1, 0.2])
    assert len(grid.gcca) == 1
    # both fractions of √4 clamp to an ℓ1 bound of 1
    assert grid.scca == (SccaParams(1.0, 1.0),)


def test_single_and_candidates() -> None:
    grid = GridSpec.single(GccaParams(), SccaParams(2.0, 2.0))
    assert grid.candidates("kgcca") == (GccaParams(),)
    assert grid.candidates("kscca") == (SccaParams(2.0, 2.0),)
    assert grid.selection_metric is SelectionMetric.VALIDATION_RHO


def test_failing_candidates_are_skipped(latent_pair: PairFactory) -> None:
    """A candidate whose system is indefinite fails; the rest still compete."""
    train, val = _train_val(latent_pair, 0)
    broken = GraphLaplacian(-1e6 * np.eye(8), train[0].feature_names)
    l2 = laplacian_from_data(train[1])
    grid = GridSpec.build(8, 6, alpha=[1.0], beta=[0.1], lam=[0.0, 10.0])

    result = grid_search(train, val, broken, l2, grid, "kgcca", workers=1)
    assert result.best_params.lambda1 == 0.0
    assert len(result.failures) == 1
    assert result.failures[0].error is not None
    assert "NotPositiveDefinite" in result.failures[0].error

    only_broken = GridSpec.build(8, 6, alpha=[1.0], beta=[0.1], lam=[10.0])
    with pytest.raises(AllCandidatesFailed):
        grid_search(train, val, broken, l2, only_broken, "kgcca", workers=1)


def test_heavy_graph_penalty_loses(latent_pair: PairFactory) -> None:
    train, val = _train_val(latent_pair, 1)
    l1 = complete_graph_laplacian(train[0].feature_names)
    l2 = complete_graph_laplacian(train[1].feature_names)
    grid = GridSpec.build(8, 6, alpha=[1.0], beta=[0.0], lam=[0.0, 1e6])

    result = grid_search(train, val, l1, l2, grid, "kgcca", workers=1)
    assert result.best_params.lambda1 == 0.0
    scores = [c.score for c in result.candidates]
    assert scores[0] is not None and scores[1] is not None
    assert scores[0] > scores[1]


def test_ties_go_to_first_candidate(latent_pair: PairFactory) -> None:
    """Inactive ℓ1 bounds give identical fits; the smallest bounds win."""
    train, val = _train_val(latent_pair, 2)
    grid = GridSpec.build(8, 6, bound_fractions=[1.0, 2.0])
    result = grid_search(train, val, None, None, grid, "kscca", workers=1)
    assert len({c.score for c in result.candidates}) == 1
    assert result.best_params == grid.scca[0]


def test_parallel_search_matches_serial(latent_pair: PairFactory) -> None:
    train, val = _train_val(latent_pair, 3)
    l1, l2 = laplacian_from_data(train[0]), laplacian_from_data(train[1])
    grid = GridSpec.build(8, 6, alpha=[0.1, 1.0], beta=[0.1], lam=[0.1, 1.0])
    serial = grid_search(train, val, l1, l2, grid, "kgcca", workers=1)
    parallel = grid_search(train, val, l1, l2, grid, "kgcca", workers=4)
    assert serial.best_params == parallel.best_params
    assert [c.score for c in serial.candidates] == [c.score for c in parallel.candidates]


def test_sum_rho_selection(latent_pair: PairFactory) -> None:
    train, val = _train_val(latent_pair, 4)
    l1, l2 = laplacian_from_data(train[0]), laplacian_from_data(train[1])
    single = validation_score(train, val, "kgcca", GccaParams(), l1, l2)
    summed = validation_score(
        train, val, "kgcca", GccaParams(), l1, l2, SelectionMetric.VALIDATION_SUM_RHO, k=2
    )
    assert 0.0 <= single <= 1.0
    assert single <= summed + 1e-12
    assert summed <= 2.0
