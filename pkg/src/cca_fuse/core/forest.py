"""A deterministic binary random forest over fused embeddings.

Trees are grown on bootstrap samples with Gini splits at midpoints between
consecutive distinct values, choosing among a random feature subset at each
node. Every tree draws from its own Philox stream keyed by (seed, tree index),
so trees can be grown in any order or in parallel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from cca_fuse.core.errors import (
    DimensionMismatch,
    InvalidParameters,
    SingleClassTraining,
    TooFewSamples,
)
from cca_fuse.core.matrix import FloatArray, frozen
from cca_fuse.core.metrics import classification_metrics
from cca_fuse.core.parallel import ordered_map

logger = logging.getLogger(__name__)

LEAF = -1
DECISION_THRESHOLD = 0.5


class FeatureSampling(Enum):
    SQRT = "sqrt"
    ALL = "all"


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 50
    min_samples_split: int = 2
    features_per_split: FeatureSampling = FeatureSampling.SQRT
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "features_per_split", FeatureSampling(self.features_per_split))
        if self.n_trees < 1:
            raise InvalidParameters(f"n_trees must be at least 1, got {self.n_trees}")
        if self.max_depth < 1:
            raise InvalidParameters(f"max_depth must be at least 1, got {self.max_depth}")
        if self.min_samples_split < 1:
            raise InvalidParameters(
                f"min_samples_split must be at least 1, got {self.min_samples_split}"
            )
        if not 0 <= self.seed < 2**64:
            raise InvalidParameters(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def split_features(self, d: int) -> int:
        if self.features_per_split is FeatureSampling.ALL:
            return d
        return max(1, math.ceil(math.sqrt(d)))


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Array-encoded binary tree.

    Node i is a leaf when feature[i] == LEAF; otherwise samples with
    x[feature[i]] <= threshold[i] go to left[i], the rest to right[i].
    value[i] is the class-1 probability at a leaf.
    """

    feature: NDArray[np.int64] = field(repr=False)
    threshold: FloatArray = field(repr=False)
    left: NDArray[np.int64] = field(repr=False)
    right: NDArray[np.int64] = field(repr=False)
    value: FloatArray = field(repr=False)

    @property
    def node_count(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def leaf_probabilities(self, node: int) -> tuple[float, float]:
        """(P(class 0), P(class 1)) at a leaf."""
        p1 = float(self.value[node])
        return 1.0 - p1, p1

    def apply(self, samples: FloatArray) -> NDArray[np.int64]:
        """Leaf index reached by each row of samples (n×d)."""
        nodes = np.zeros(samples.shape[0], dtype=np.int64)
        active = self.feature[nodes] != LEAF
        rows = np.arange(samples.shape[0])
        while np.any(active):
            current = nodes[active]
            go_left = samples[rows[active], self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] != LEAF
        return nodes

    def predict_scores(self, samples: FloatArray) -> FloatArray:
        return np.asarray(self.value[self.apply(samples)])

    def structure(self) -> tuple[tuple[int, float, int, int, float], ...]:
        """Node tuples for structural comparison."""
        return tuple(
            (int(f), float(t), int(a), int(b), float(v))
            for f, t, a, b, v in zip(
                self.feature, self.threshold, self.left, self.right, self.value, strict=True
            )
        )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    config: ForestConfig
    n_features: int
    # Accuracy of out-of-bag votes; None when every sample was in every bootstrap
    oob_accuracy: float | None = None


class _TreeBuilder:
    """Grows one tree depth-first, left subtree before right."""

    def __init__(
        self,
        samples: FloatArray,
        labels: NDArray[np.int64],
        config: ForestConfig,
        rng: np.random.Generator,
    ) -> None:
        self.samples = samples
        self.labels = labels
        self.config = config
        self.rng = rng
        self.n_try = config.split_features(samples.shape[1])
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _best_split(self, idx: NDArray[np.intp]) -> tuple[int, float] | None:
        d = self.samples.shape[1]
        candidates = np.sort(self.rng.choice(d, size=self.n_try, replace=False))
        y = self.labels[idx]
        n = y.shape[0]
        total_pos = int(y.sum())
        sizes = np.arange(1, n)

        best: tuple[float, int, float] | None = None
        for f in candidates.tolist():
            column = self.samples[idx, f]
            order = np.argsort(column, kind="stable")
            xs = column[order]
            valid = xs[:-1] < xs[1:]
            if not np.any(valid):
                continue
            left_pos = np.cumsum(y[order])[:-1]
            right_pos = total_pos - left_pos
            right_sizes = n - sizes
            p_left = left_pos / sizes
            p_right = right_pos / right_sizes
            gini_left = 2 * p_left * (1 - p_left)
            gini_right = 2 * p_right * (1 - p_right)
            impurity = (sizes * gini_left + right_sizes * gini_right) / n
            impurity = np.where(valid, impurity, np.inf)
            pos = int(np.argmin(impurity))
            score = float(impurity[pos])
            if best is None or score < best[0]:
                lo, hi = float(xs[pos]), float(xs[pos + 1])
                mid = lo + (hi - lo) / 2
                if not lo <= mid < hi:
                    mid = lo
                best = (score, f, mid)

        if best is None:
            return None
        return best[1], best[2]

    def grow(self, idx: NDArray[np.intp], depth: int) -> int:
        node = self._new_node()
        y = self.labels[idx]
        self.value[node] = float(y.mean())
        pure = y.min() == y.max()
        if pure or depth >= self.config.max_depth or idx.shape[0] < self.config.min_samples_split:
            return node

        found = self._best_split(idx)
        if found is None:
            return node
        f, threshold = found
        mask = self.samples[idx, f] <= threshold
        self.feature[node] = f
        self.threshold[node] = threshold
        self.left[node] = self.grow(idx[mask], depth + 1)
        self.right[node] = self.grow(idx[~mask], depth + 1)
        return node

    def build(self, idx: NDArray[np.intp]) -> DecisionTree:
        self.grow(idx, 0)
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=frozen(self.threshold),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=frozen(self.value),
        )


def _labels(values: ArrayLike) -> NDArray[np.int64]:
    array = np.asarray(values).reshape(-1)
    if not np.all((array == 0) | (array == 1)):
        raise InvalidParameters("labels must contain only 0 and 1")
    return array.astype(np.int64)


def _samples(z: ArrayLike) -> FloatArray:
    array = np.asarray(z, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionMismatch(f"expected a d×n matrix, got {array.ndim} dimensions")
    if not np.all(np.isfinite(array)):
        raise InvalidParameters("forest inputs must be finite")
    return np.ascontiguousarray(array.T)


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _oob_accuracy(
    trees: list[DecisionTree],
    bootstraps: list[NDArray[np.intp]],
    samples: FloatArray,
    labels: NDArray[np.int64],
) -> float | None:
    n = labels.shape[0]
    totals = np.zeros(n)
    counts = np.zeros(n)
    for tree, drawn in zip(trees, bootstraps, strict=True):
        out = np.ones(n, dtype=bool)
        out[drawn] = False
        if np.any(out):
            totals[out] += tree.predict_scores(samples[out])
            counts[out] += 1
    covered = counts > 0
    if not np.any(covered):
        return None
    votes = (totals[covered] / counts[covered] >= DECISION_THRESHOLD).astype(np.int64)
    return float(np.mean(votes == labels[covered]))


def train_forest(
    z: ArrayLike,
    labels: ArrayLike,
    config: ForestConfig | None = None,
    workers: int | None = None,
) -> ForestModel:
    """Train on z (d features × n samples) with binary labels."""
    config = config or ForestConfig()
    samples = _samples(z)
    y = _labels(labels)
    n, d = samples.shape
    if y.shape[0] != n:
        raise DimensionMismatch(f"{y.shape[0]} labels for {n} samples")
    if n < 2:
        raise TooFewSamples(f"need at least 2 training samples, got {n}")
    if y.min() == y.max():
        raise SingleClassTraining(f"all {n} training labels are {int(y[0])}")

    def grow(index: int) -> tuple[DecisionTree, NDArray[np.intp]]:
        rng = tree_rng(config.seed, index)
        drawn = rng.integers(0, n, size=n)
        return _TreeBuilder(samples, y, config, rng).build(drawn), drawn

    grown = ordered_map(grow, range(config.n_trees), workers)
    trees = [tree for tree, _ in grown]
    oob = _oob_accuracy(trees, [drawn for _, drawn in grown], samples, y)
    logger.debug(
        "Trained %d trees on %d samples x %d features (OOB accuracy %s)",
        config.n_trees,
        n,
        d,
        "n/a" if oob is None else f"{oob:.3f}",
    )
    return ForestModel(trees=tuple(trees), config=config, n_features=d, oob_accuracy=oob)


@dataclass(frozen=True, eq=False)
class ForestPrediction:
    labels: NDArray[np.int64] = field(repr=False)
    scores: FloatArray = field(repr=False)


def predict_forest(model: ForestModel, z: ArrayLike) -> ForestPrediction:
    """Mean class-1 leaf probability over trees; label 1 when it is ≥ 0.5."""
    samples = _samples(z)
    if samples.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got {samples.shape[1]}"
        )
    scores = np.zeros(samples.shape[0])
    for tree in model.trees:
        scores += tree.predict_scores(samples)
    scores /= len(model.trees)
    return ForestPrediction(
        labels=(scores >= DECISION_THRESHOLD).astype(np.int64),
        scores=frozen(scores),
    )


def permutation_null(
    z_train: ArrayLike,
    labels_train: ArrayLike,
    z_test: ArrayLike,
    labels_test: ArrayLike,
    config: ForestConfig | None = None,
    n_permutations: int = 20,
    seed: int = 0,
    workers: int | None = None,
) -> FloatArray:
    """Weighted F1 on the test set of forests trained on shuffled labels."""
    if n_permutations < 1:
        raise InvalidParameters(f"n_permutations must be positive, got {n_permutations}")
    config = config or ForestConfig()
    y_train = _labels(labels_train)
    y_test = _labels(labels_test)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))

    scores = np.empty(n_permutations)
    for i in range(n_permutations):
        shuffled = rng.permutation(y_train)
        model = train_forest(z_train, shuffled, config, workers)
        prediction = predict_forest(model, z_test)
        scores[i] = classification_metrics(y_test, prediction.labels, prediction.scores).weighted_f1
    return frozen(scores)
