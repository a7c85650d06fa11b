"""Tests for synthetic data generation and splitting."""

from __future__ import annotations

import numpy as np
import pytest

from cca_fuse.core.errors import InvalidParameters, TooFewSamples
from cca_fuse.core.metrics import pearson
from cca_fuse.core.simulate import (
    SimConfig,
    default_settings,
    generate,
    labels_from_weights,
    laplacian_eigenvectors,
    make_rng,
    noise_covariance,
    pattern_direction,
    psd_sqrt,
    repetition_configs,
    settings_preset,
    split,
    split_indices,
)


def test_pattern_direction_blocks() -> None:
    v = pattern_direction(100)
    scale = np.linalg.norm([3.0] * 10 + [-1.5] * 10 + [1.0] * 10 + [2.0] * 10)
    np.testing.assert_allclose(v[:10], 3.0 / scale)
    np.testing.assert_allclose(v[10:20], -1.5 / scale)
    np.testing.assert_allclose(v[20:30], 1.0 / scale)
    np.testing.assert_allclose(v[30:40], 2.0 / scale)
    np.testing.assert_array_equal(v[40:], 0.0)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_pattern_direction_small_q() -> None:
    v = pattern_direction(3)
    np.testing.assert_allclose(v * np.linalg.norm([3.0, -1.5, 1.0]), [3.0, -1.5, 1.0])


def test_noise_covariance_and_root() -> None:
    sigma = noise_covariance([0.0, 1.0, 1.0])
    np.testing.assert_allclose(sigma[0], [1.0, np.exp(-1.0), np.exp(-1.0)])
    np.testing.assert_allclose(sigma[1, 2], 1.0)
    root = psd_sqrt(sigma)
    np.testing.assert_allclose(root @ root, sigma, atol=1e-12)


def test_generate_shapes_and_names() -> None:
    instance = generate(SimConfig(n=50, p=12, q=10, l=3, sigma=0.5, seed=1))
    assert instance.x.values.shape == (12, 50)
    assert instance.y.values.shape == (10, 50)
    assert instance.x.feature_names[0] == "x0001"
    assert instance.y.feature_names[-1] == "y0010"
    assert instance.x.sample_ids == instance.y.sample_ids
    assert instance.x.sample_ids[0] == "s0001"


def test_generate_is_deterministic() -> None:
    config = SimConfig(n=40, p=10, q=10, l=2, sigma=0.75, seed=7)
    first, second = generate(config), generate(config)
    np.testing.assert_array_equal(first.x.values, second.x.values)
    np.testing.assert_array_equal(first.y.values, second.y.values)
    np.testing.assert_array_equal(first.u_true, second.u_true)

    other = generate(SimConfig(n=40, p=10, q=10, l=2, sigma=0.75, seed=8))
    assert not np.array_equal(first.x.values, other.x.values)


def test_true_u_is_smooth_on_complete_graph() -> None:
    """u_true is unit-norm, orthogonal to the constant vector, with uᵀLu = p."""
    instance = generate(SimConfig(n=20, p=15, q=10, l=4, sigma=0.5, seed=3))
    u = instance.u_true
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert abs(u.sum()) <= 1e-10
    assert instance.l_true.quadratic_form(u) == pytest.approx(15.0)


def test_true_u_lies_in_low_frequency_span() -> None:
    instance = generate(SimConfig(n=20, p=15, q=10, l=4, sigma=0.5, seed=3))
    _, basis = laplacian_eigenvectors(instance.l_true, 4)
    coefficients, *_ = np.linalg.lstsq(basis, instance.u_true, rcond=None)
    assert np.linalg.norm(basis @ coefficients - instance.u_true) < 1e-10


def test_y_noise_has_pattern_covariance() -> None:
    instance = generate(SimConfig(n=20000, p=5, q=10, l=2, sigma=1.0, seed=2))
    residual = instance.y.values - np.outer(instance.v_true, instance.weights)
    empirical = residual @ residual.T / instance.config.n
    np.testing.assert_allclose(empirical, noise_covariance(instance.v_true), atol=0.1)


def test_near_noiseless_variates_are_correlated() -> None:
    instance = generate(SimConfig(n=200, p=20, q=20, l=5, sigma=1e-8, seed=0))
    x_variate = instance.u_true @ instance.x.values
    y_variate = instance.v_true @ instance.y.values
    assert pearson(x_variate, y_variate) > 0.999


def test_sim_config_validation() -> None:
    with pytest.raises(InvalidParameters):
        SimConfig(n=2)
    with pytest.raises(InvalidParameters):
        SimConfig(p=5, l=5)
    with pytest.raises(InvalidParameters):
        SimConfig(sigma=0.0)
    assert SimConfig().label == "l=5 sigma=0.5"


def test_split_sizes() -> None:
    for n, sizes in ((1000, (500, 100, 400)), (10, (5, 1, 4))):
        parts = split_indices(n, (0.5, 0.1, 0.4), seed=0)
        assert tuple(len(part) for part in parts) == sizes
        assert sorted(np.concatenate(parts).tolist()) == list(range(n))


def test_split_too_few_samples() -> None:
    with pytest.raises(TooFewSamples):
        split_indices(3, (0.5, 0.1, 0.4), seed=0)
    with pytest.raises(InvalidParameters):
        split_indices(10, (0.5, 0.5, 0.5), seed=0)


def test_split_keeps_pairs_aligned() -> None:
    instance = generate(SimConfig(n=30, p=5, q=4, l=2, seed=2))
    parts = split(instance.x, instance.y, seed=4)
    for part in parts:
        assert part.x.sample_ids == part.y.sample_ids
    assert split(instance.x, instance.y, seed=4).test.x.sample_ids == parts.test.x.sample_ids


def test_repetition_seeds() -> None:
    configs = repetition_configs(SimConfig(seed=10), 3)
    assert [c.seed for c in configs] == [10, 11, 12]
    assert repetition_configs(SimConfig(), 0) == []


def test_labels_from_weights() -> None:
    np.testing.assert_array_equal(labels_from_weights([0.5, -0.1, 0.0, 2.0]), [1, 0, 0, 1])


def test_settings_presets() -> None:
    settings = default_settings()
    assert len(settings) == 8
    assert {(s.l, s.sigma) for s in settings} == {
        (l, s) for l in (5, 10, 25, 50) for s in (0.5, 0.75)  # noqa: E741
    }
    assert all(s.n == 200 for s in settings_preset("small"))
    with pytest.raises(InvalidParameters):
        settings_preset("huge")


def test_make_rng_is_reproducible() -> None:
    assert make_rng(5).integers(0, 1000, size=5).tolist() == (
        make_rng(5).integers(0, 1000, size=5).tolist()
    )
