"""Synthetic two-modality data with known canonical directions.

A single latent w_i per sample drives both modalities:

    X_i ~ N(u·w_i, σ²·I)        Y_i ~ N(v·w_i, σ²·Σ_v)

where u is a random combination of complete-graph Laplacian eigenvectors
and v is a fixed block pattern with Σ_v[i, j] = exp(−|v_i − v_j|).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from cca_fuse.core.errors import InvalidParameters, TooFewSamples
from cca_fuse.core.graph import GraphLaplacian, complete_graph_laplacian
from cca_fuse.core.matrix import DataMatrix, FloatArray, frozen, require_paired

logger = logging.getLogger(__name__)

# Block values of v_true and the share (out of 100 features) each block takes
PATTERN_VALUES = (3.0, -1.5, 1.0, 2.0)
PATTERN_SHARE = 10

# Eigenvalues are rounded to this many decimals before tie-breaking on vectors
EIGENVALUE_DECIMALS = 8

BENCHMARK_LS = (5, 10, 25, 50)
BENCHMARK_SIGMAS = (0.5, 0.75)


def make_rng(seed: int | list[int]) -> np.random.Generator:
    """Counter-based generator (Philox) for a seed or a seed path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class SimConfig:
    """One simulation setting."""

    n: int = 1000
    p: int = 100
    q: int = 100
    l: int = 5  # noqa: E741
    sigma: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 3:
            raise InvalidParameters(f"n must be at least 3, got {self.n}")
        if self.p < 1 or self.q < 1:
            raise InvalidParameters(f"p and q must be positive, got {self.p} and {self.q}")
        if not 1 <= self.l < self.p:
            raise InvalidParameters(f"l must lie in [1, p), got l={self.l} with p={self.p}")
        if not self.sigma > 0:
            raise InvalidParameters(f"sigma must be positive, got {self.sigma}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameters(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def label(self) -> str:
        return f"l={self.l} sigma={self.sigma:g}"


@dataclass(frozen=True, eq=False)
class SimInstance:
    """Generated data together with the directions and graph that produced it."""

    x: DataMatrix
    y: DataMatrix
    u_true: FloatArray = field(repr=False)
    v_true: FloatArray = field(repr=False)
    l_true: GraphLaplacian = field(repr=False)
    weights: FloatArray = field(repr=False)
    config: SimConfig = field(default_factory=SimConfig)


def pattern_direction(q: int) -> FloatArray:
    """Unit-norm block pattern 3, −1.5, 1, 2, 0 scaled to q features.

    Each nonzero block gets floor(q/10) entries and the zero block the rest;
    below q = 10 the first min(q, 4) blocks get one entry each.
    """
    if q < 1:
        raise InvalidParameters(f"q must be positive, got {q}")
    block = q * PATTERN_SHARE // 100
    sizes = [block] * len(PATTERN_VALUES)
    if block == 0:
        sizes = [1 if i < min(q, len(PATTERN_VALUES)) else 0 for i in range(len(PATTERN_VALUES))]

    entries: list[float] = []
    for value, size in zip(PATTERN_VALUES, sizes, strict=True):
        entries.extend([value] * size)
    entries.extend([0.0] * (q - len(entries)))
    v = np.asarray(entries)
    return frozen(v / np.linalg.norm(v))


def noise_covariance(v: ArrayLike) -> FloatArray:
    """Σ_v[i, j] = exp(−|v_i − v_j|)."""
    vec = np.asarray(v, dtype=np.float64)
    return frozen(np.exp(-np.abs(vec[:, None] - vec[None, :])))


def psd_sqrt(sigma: ArrayLike) -> FloatArray:
    """Symmetric square root with negative eigenvalues clipped to zero."""
    eigenvalues, vectors = scipy.linalg.eigh(np.asarray(sigma, dtype=np.float64))
    root = np.sqrt(np.clip(eigenvalues, 0.0, None))
    return np.asarray((vectors * root) @ vectors.T)


def laplacian_eigenvectors(laplacian: GraphLaplacian, count: int) -> tuple[FloatArray, FloatArray]:
    """Eigenpairs of the first count nonzero eigenvalues, in a fixed order.

    Each eigenvector is sign-flipped so its largest-magnitude entry is
    positive; pairs are ordered by rounded eigenvalue, then lexicographically
    by vector. The single zero eigenvalue of a connected graph is skipped.
    """
    eigenvalues, vectors = scipy.linalg.eigh(laplacian.matrix)
    columns = []
    for i in range(vectors.shape[1]):
        vec = vectors[:, i]
        if vec[int(np.argmax(np.abs(vec)))] < 0:
            vec = -vec
        columns.append((round(float(eigenvalues[i]), EIGENVALUE_DECIMALS), tuple(vec), i))
    columns.sort()

    scale = max(float(np.max(np.abs(eigenvalues))), 1.0)
    nonzero = [entry for entry in columns if abs(entry[0]) > 1e-9 * scale]
    if len(nonzero) < count:
        raise InvalidParameters(f"graph has {len(nonzero)} nonzero eigenvalues, need {count}")
    chosen = nonzero[:count]
    values = np.array([float(eigenvalues[i]) for _, _, i in chosen])
    basis = np.column_stack([np.asarray(vec) for _, vec, _ in chosen])
    return values, basis


def _names(prefix: str, count: int) -> list[str]:
    width = max(4, len(str(count)))
    return [f"{prefix}{i + 1:0{width}d}" for i in range(count)]


def generate(config: SimConfig) -> SimInstance:
    """Draw one instance; identical configs give bitwise-identical output.

    Random draws happen in a fixed order from one Philox stream: eigenvector
    coefficients, latent weights, X noise, Y noise.
    """
    rng = make_rng(config.seed)
    x_names = _names("x", config.p)
    y_names = _names("y", config.q)
    sample_ids = _names("s", config.n)

    l_true = complete_graph_laplacian(x_names)
    _, basis = laplacian_eigenvectors(l_true, config.l)
    coefficients = rng.standard_normal(config.l)
    u = basis @ coefficients
    u_true = u / np.linalg.norm(u)

    v_true = pattern_direction(config.q)
    factor = psd_sqrt(noise_covariance(v_true))

    weights = rng.standard_normal(config.n)
    x_noise = rng.standard_normal((config.p, config.n))
    y_noise = rng.standard_normal((config.q, config.n))

    x = np.outer(u_true, weights) + config.sigma * x_noise
    y = np.outer(v_true, weights) + config.sigma * (factor @ y_noise)

    logger.debug("Generated %s with seed %d", config.label, config.seed)
    return SimInstance(
        x=DataMatrix(x, x_names, sample_ids),
        y=DataMatrix(y, y_names, sample_ids),
        u_true=frozen(u_true),
        v_true=v_true,
        l_true=l_true,
        weights=frozen(weights),
        config=config,
    )


class Partition(NamedTuple):
    x: DataMatrix
    y: DataMatrix


class Split(NamedTuple):
    train: Partition
    val: Partition
    test: Partition


def split_indices(
    n: int, fractions: tuple[float, float, float], seed: int
) -> tuple[NDArray[np.intp], NDArray[np.intp], NDArray[np.intp]]:
    """Seeded permutation of range(n) cut into train/val/test index arrays.

    Train and validation sizes are floor(n·fraction); test takes the rest.
    """
    if len(fractions) != 3 or any(not f > 0 for f in fractions):
        raise InvalidParameters(f"need three positive fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidParameters(f"fractions must sum to 1, got {sum(fractions)}")

    n_train = int(np.floor(n * fractions[0] + 1e-9))
    n_val = int(np.floor(n * fractions[1] + 1e-9))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise TooFewSamples(
            f"{n} samples give an empty partition ({n_train}/{n_val}/{n_test})"
        )

    order = make_rng(seed).permutation(n)
    return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]


def split(
    x: DataMatrix,
    y: DataMatrix,
    fractions: tuple[float, float, float] = (0.5, 0.1, 0.4),
    seed: int = 0,
) -> Split:
    """Partition paired samples into train, validation and test."""
    require_paired(x, y)
    parts = split_indices(x.n_samples, fractions, seed)
    train, val, test = (Partition(x.select_samples(idx), y.select_samples(idx)) for idx in parts)
    return Split(train, val, test)


def repetition_configs(config: SimConfig, repetitions: int) -> list[SimConfig]:
    """Copies of config with seeds seed+0 … seed+repetitions−1."""
    if repetitions < 0:
        raise InvalidParameters(f"repetitions must be non-negative, got {repetitions}")
    return [replace(config, seed=config.seed + r) for r in range(repetitions)]


def labels_from_weights(weights: ArrayLike) -> NDArray[np.int64]:
    """Binary labels: 1 where the latent weight is positive."""
    return (np.asarray(weights) > 0).astype(np.int64)


def default_settings(n: int = 1000, p: int = 100, q: int = 100, seed: int = 0) -> list[SimConfig]:
    """The eight benchmark settings: l in {5, 10, 25, 50} by σ in {0.5, 0.75}."""
    return [
        SimConfig(n=n, p=p, q=q, l=l, sigma=sigma, seed=seed)
        for l in BENCHMARK_LS  # noqa: E741
        for sigma in BENCHMARK_SIGMAS
    ]


def small_settings(seed: int = 0) -> list[SimConfig]:
    """A scaled-down grid of settings for quick runs."""
    return [
        SimConfig(n=200, p=20, q=20, l=l, sigma=sigma, seed=seed)
        for l in (2, 5)  # noqa: E741
        for sigma in BENCHMARK_SIGMAS
    ]


SETTING_PRESETS = {
    "default": default_settings,
    "small": small_settings,
}


def settings_preset(name: str, seed: int = 0) -> list[SimConfig]:
    """Look up a named list of settings."""
    builder = SETTING_PRESETS.get(name)
    if builder is None:
        raise InvalidParameters(
            f"unknown settings preset '{name}' (choose from {sorted(SETTING_PRESETS)})"
        )
    return builder(seed=seed)
