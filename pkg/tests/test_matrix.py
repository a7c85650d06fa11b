"""Tests for data matrices, preprocessing and the linear-algebra kernel."""

from __future__ import annotations

import numpy as np
import pytest

from cca_fuse.core.errors import (
    InvalidMatrix,
    InvalidParameters,
    NotPositiveDefinite,
    SampleMismatch,
    ZeroVarianceFeature,
)
from cca_fuse.core.matrix import (
    DataMatrix,
    PreprocessMode,
    covariances,
    fit_scaler,
    preprocess,
    spd_solve,
    soft_threshold,
)

from .conftest import make_matrix


def test_data_matrix_rejects_bad_input() -> None:
    """Non-finite values and duplicate names are rejected."""
    with pytest.raises(InvalidMatrix):
        DataMatrix([[1.0, np.nan]], ["a"], ["s1", "s2"])
    with pytest.raises(InvalidMatrix):
        DataMatrix([[1.0, 2.0], [3.0, 4.0]], ["a", "a"], ["s1", "s2"])
    with pytest.raises(InvalidMatrix):
        DataMatrix([[1.0, 2.0]], ["a"], ["s1", "s1"])
    with pytest.raises(InvalidMatrix):
        DataMatrix([[1.0, 2.0]], ["a", "b"], ["s1", "s2"])


def test_data_matrix_is_read_only() -> None:
    m = DataMatrix([[1.0, 2.0]], ["a"], ["s1", "s2"])
    with pytest.raises(ValueError):
        m.values[0, 0] = 5.0


def test_select_and_stack() -> None:
    """Sample selection keeps order; stacking puts X rows above Y rows."""
    x = DataMatrix([[1.0, 2.0, 3.0]], ["a"], ["s1", "s2", "s3"])
    y = DataMatrix([[4.0, 5.0, 6.0]], ["b"], ["s1", "s2", "s3"])

    picked = x.select_samples([2, 0])
    assert picked.sample_ids == ("s3", "s1")
    np.testing.assert_array_equal(picked.values, [[3.0, 1.0]])

    stacked = x.stack(y)
    assert stacked.feature_names == ("a", "b")
    np.testing.assert_array_equal(stacked.values, [[1, 2, 3], [4, 5, 6]])


def test_preprocess_none_is_identity() -> None:
    m = DataMatrix([[1.0, 5.0, 2.0]], ["a"], ["s1", "s2", "s3"])
    assert preprocess(m, PreprocessMode.NONE) is m


def test_preprocess_center_and_zscore() -> None:
    """Row [1, 2, 3] centers and z-scores to [-1, 0, 1]."""
    m = DataMatrix([[1.0, 2.0, 3.0]], ["a"], ["s1", "s2", "s3"])
    np.testing.assert_allclose(preprocess(m, "center").values, [[-1.0, 0.0, 1.0]])
    np.testing.assert_allclose(preprocess(m, "zscore").values, [[-1.0, 0.0, 1.0]])
    assert preprocess(m, "zscore").feature_names == ("a",)


def test_preprocess_zscore_constant_row() -> None:
    m = DataMatrix([[1.0, 2.0, 3.0], [4.0, 4.0, 4.0]], ["a", "flat"], ["s1", "s2", "s3"])
    with pytest.raises(ZeroVarianceFeature, match="flat"):
        preprocess(m, "zscore")


def test_center_rows_have_zero_mean(rng: np.random.Generator) -> None:
    m = make_matrix(rng.normal(5.0, 3.0, size=(7, 40)))
    centered = preprocess(m, "center")
    assert np.max(np.abs(centered.values.mean(axis=1))) <= 1e-12


def test_scaler_uses_training_statistics_only(rng: np.random.Generator) -> None:
    """Statistics from one partition are applied unchanged to another."""
    data = make_matrix(rng.normal(0.0, 1.0, size=(4, 100)))
    train = data.select_samples(range(50))
    test = data.select_samples(range(50, 100)).with_values(
        data.select_samples(range(50, 100)).values + 3.0
    )
    scaler = fit_scaler(train, PreprocessMode.CENTER)

    np.testing.assert_allclose(scaler.apply(train).values.mean(axis=1), 0.0, atol=1e-12)
    assert np.all(np.abs(scaler.apply(test).values.mean(axis=1)) > 1.0)


def test_covariances_small_examples() -> None:
    x = DataMatrix([[1.0, -1.0]], ["a"], ["s1", "s2"])
    cov = covariances(x, x)
    np.testing.assert_array_equal(cov.sigma_x, [[2.0]])
    np.testing.assert_array_equal(cov.sigma_xy, [[2.0]])

    eye = DataMatrix(np.eye(2), ["a", "b"], ["s1", "s2"])
    zeros = DataMatrix(np.zeros((2, 2)), ["c", "d"], ["s1", "s2"])
    np.testing.assert_array_equal(covariances(eye, zeros).sigma_xy, np.zeros((2, 2)))


def test_covariances_match_triple_loop(rng: np.random.Generator) -> None:
    xv = rng.standard_normal((3, 5))
    yv = rng.standard_normal((3, 5))
    cov = covariances(make_matrix(xv, "x"), make_matrix(yv, "y"))

    expected = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for s in range(5):
                expected[i, j] += xv[i, s] * yv[j, s]
    np.testing.assert_allclose(cov.sigma_xy, expected, rtol=1e-12, atol=1e-12)


def test_covariances_are_psd(rng: np.random.Generator) -> None:
    for _ in range(20):
        m = make_matrix(rng.standard_normal((6, int(rng.integers(2, 12)))))
        sigma = covariances(m, m).sigma_x
        eigenvalues = np.linalg.eigvalsh(sigma)
        assert eigenvalues[0] >= -1e-8 * max(eigenvalues[-1], 1.0)
        np.testing.assert_array_equal(sigma, sigma.T)


def test_covariances_sample_mismatch() -> None:
    x = DataMatrix([[1.0, 2.0]], ["a"], ["s1", "s2"])
    y = DataMatrix([[1.0, 2.0, 3.0]], ["b"], ["s1", "s2", "s3"])
    with pytest.raises(SampleMismatch):
        covariances(x, y)

    swapped = DataMatrix([[1.0, 2.0]], ["b"], ["s2", "s1"])
    with pytest.raises(SampleMismatch, match="position 0"):
        covariances(x, swapped)


def test_spd_solve_simple_systems() -> None:
    b = np.array([3.0, -2.0, 0.5])
    np.testing.assert_allclose(spd_solve(np.eye(3), b), b)
    np.testing.assert_allclose(spd_solve([[2.0, 0.0], [0.0, 4.0]], [2.0, 4.0]), [1.0, 1.0])


def test_spd_solve_matches_inverse(rng: np.random.Generator) -> None:
    m = rng.standard_normal((5, 5))
    a = m.T @ m + np.eye(5)
    b = rng.standard_normal(5)
    np.testing.assert_allclose(spd_solve(a, b), np.linalg.inv(a) @ b, rtol=1e-10)


def test_spd_solve_residual_on_large_systems(rng: np.random.Generator) -> None:
    for n in (50, 200, 500):
        m = rng.standard_normal((n, n))
        a = m.T @ m + np.eye(n)
        b = rng.standard_normal(n)
        x = spd_solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_spd_solve_jitter_rescues_singular_psd() -> None:
    """A singular PSD system is solved after a small diagonal shift."""
    x = spd_solve([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])
    np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-8)


def test_spd_solve_not_positive_definite() -> None:
    with pytest.raises(NotPositiveDefinite):
        spd_solve(-np.eye(3), np.ones(3))
    with pytest.raises(NotPositiveDefinite):
        spd_solve([[1.0, 0.0], [0.0, -1.0]], [1.0, 1.0])


def test_soft_threshold_examples() -> None:
    np.testing.assert_array_equal(soft_threshold([3.0, -1.0, 0.5], 1.0), [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(soft_threshold([1.5, -2.0], 0.0), [1.5, -2.0])
    np.testing.assert_array_equal(soft_threshold([0.0, 0.0], 5.0), [0.0, 0.0])
    with pytest.raises(InvalidParameters):
        soft_threshold([1.0], -0.1)


def test_soft_threshold_shrinks_without_sign_flip(rng: np.random.Generator) -> None:
    for _ in range(50):
        v = rng.standard_normal(10)
        out = soft_threshold(v, float(rng.uniform(0, 2)))
        assert np.all(np.abs(out) <= np.abs(v))
        assert np.all(out * v >= 0)
