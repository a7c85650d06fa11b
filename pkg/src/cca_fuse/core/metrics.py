"""Evaluation metrics: direction recovery, correlations and classification scores."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike
from sklearn.metrics import accuracy_score, f1_score, roc_auc_score

from cca_fuse.core.errors import (
    ConstantInput,
    DimensionMismatch,
    InvalidParameters,
    SingleClassInput,
    TooFewSamples,
    ZeroDenominator,
    ZeroVector,
)
from cca_fuse.core.graph import GraphLaplacian
from cca_fuse.core.matrix import FloatArray

if TYPE_CHECKING:
    from cca_fuse.core.matrix import DataMatrix
    from cca_fuse.solvers.embedding import EmbeddingModel

logger = logging.getLogger(__name__)


def _vector(values: ArrayLike) -> FloatArray:
    return np.asarray(values, dtype=np.float64).reshape(-1)


def _same_length(a: FloatArray, b: FloatArray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")


@dataclass(frozen=True)
class EvalRecord:
    """One named metric value with context tags (setting, repetition, method...)."""

    name: str
    value: float
    context: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise InvalidParameters(f"metric '{self.name}' is not finite: {self.value}")
        if any(c in self.name for c in ",\n"):
            raise InvalidParameters(f"metric name '{self.name}' contains a separator")
        for key, val in self.context.items():
            if any(c in key for c in ",;=\n") or any(c in val for c in ",;\n"):
                raise InvalidParameters(f"context tag {key}={val!r} contains a separator")

    def to_csv_line(self) -> str:
        """name,value,key1=val1;key2=val2 with the value at full precision."""
        tags = ";".join(f"{key}={val}" for key, val in self.context.items())
        return f"{self.name},{float(self.value)!r},{tags}"


def cosine_distance_abs(a: ArrayLike, b: ArrayLike) -> float:
    """1 − |a·b| / (‖a‖‖b‖), insensitive to scale and sign."""
    va, vb = _vector(a), _vector(b)
    _same_length(va, vb)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0 or nb == 0:
        raise ZeroVector("cosine distance of a zero vector")
    cosine = abs(float(va @ vb)) / (na * nb)
    return float(max(0.0, 1.0 - min(cosine, 1.0)))


def pearson(a: ArrayLike, b: ArrayLike) -> float:
    """Pearson correlation of two equal-length, non-constant vectors."""
    va, vb = _vector(a), _vector(b)
    _same_length(va, vb)
    if va.shape[0] < 2:
        raise TooFewSamples("correlation needs at least two observations")
    if np.ptp(va) == 0 or np.ptp(vb) == 0:
        raise ConstantInput("correlation of a constant vector is undefined")
    da = va - va.mean()
    db = vb - vb.mean()
    denom = float(np.sqrt((da @ da) * (db @ db)))
    if denom == 0:
        raise ConstantInput("correlation of a constant vector is undefined")
    return float(np.clip((da @ db) / denom, -1.0, 1.0))


def correlation_error(
    u_true: ArrayLike,
    v_true: ArrayLike,
    u_hat: ArrayLike,
    v_hat: ArrayLike,
    x_test: DataMatrix,
    y_test: DataMatrix,
) -> float:
    """|ρ − ρ̂| between the true and the estimated test-set variate correlations."""
    x, y = x_test.values, y_test.values
    rho = pearson(_vector(u_true) @ x, _vector(v_true) @ y)
    rho_hat = pearson(_vector(u_hat) @ x, _vector(v_hat) @ y)
    return abs(rho - rho_hat)


def spectral_frequency_ratio(
    u_true: ArrayLike, u_hat: ArrayLike, laplacian: GraphLaplacian
) -> float:
    """|uᵀLu − ûᵀLû| / |uᵀLu|."""
    true_form = laplacian.quadratic_form(u_true)
    hat_form = laplacian.quadratic_form(u_hat)
    scale = float(np.max(np.abs(np.diag(laplacian.matrix)))) if laplacian.size else 0.0
    norm_sq = float(_vector(u_true) @ _vector(u_true))
    if abs(true_form) <= 1e-12 * max(scale, 1.0) * max(norm_sq, 1e-300):
        raise ZeroDenominator("true direction lies in the Laplacian's null space")
    return abs(true_form - hat_form) / abs(true_form)


def sum_correlations(model: EmbeddingModel, x: DataMatrix, y: DataMatrix) -> float:
    """Σ_k |pearson(u_kᵀX, v_kᵀY)|; constant variates contribute 0."""
    x_e = np.asarray(model.u_matrix).T @ x.values
    y_e = np.asarray(model.v_matrix).T @ y.values
    total = 0.0
    for component in range(model.k):
        try:
            total += abs(pearson(x_e[component], y_e[component]))
        except ConstantInput:
            logger.debug("Component %d has a constant variate", component)
    return total


@dataclass(frozen=True)
class ClassificationReport:
    """Accuracy plus support-weighted F1 and AUC over both classes."""

    accuracy: float
    weighted_f1: float
    weighted_auc: float | None
    n: int

    def as_dict(self) -> dict[str, float]:
        values = {"accuracy": self.accuracy, "weighted_f1": self.weighted_f1}
        if self.weighted_auc is not None:
            values["weighted_auc"] = self.weighted_auc
        return values


def _binary(values: ArrayLike, label: str) -> np.ndarray:
    array = np.asarray(values).reshape(-1)
    if not np.all((array == 0) | (array == 1)):
        raise InvalidParameters(f"{label} must contain only 0 and 1")
    return array.astype(np.int64)


def weighted_auc(y_true: ArrayLike, scores: ArrayLike) -> float:
    """Support-weighted one-vs-rest AUC over both classes."""
    truth = _binary(y_true, "y_true")
    probs = _vector(scores)
    _same_length(truth.astype(np.float64), probs)
    supports = [int(np.sum(truth == c)) for c in (0, 1)]
    if 0 in supports:
        raise SingleClassInput("AUC needs both classes in y_true")
    # The class-0 curve scores 1 − p and mirrors the class-1 curve, so the
    # support-weighted average equals the binary AUC
    return float(roc_auc_score(truth, probs))


def classification_metrics(
    y_true: ArrayLike, y_pred: ArrayLike, scores: ArrayLike
) -> ClassificationReport:
    """Accuracy, support-weighted F1 and support-weighted AUC.

    When y_true holds a single class the AUC is reported as None.
    """
    truth = _binary(y_true, "y_true")
    pred = _binary(y_pred, "y_pred")
    probs = _vector(scores)
    if not (truth.shape == pred.shape == probs.shape):
        raise DimensionMismatch("labels, predictions and scores must have equal lengths")
    if truth.shape[0] == 0:
        raise TooFewSamples("no samples to score")
    if np.any((probs < 0) | (probs > 1)):
        raise InvalidParameters("scores must lie in [0, 1]")

    n = truth.shape[0]
    accuracy = float(accuracy_score(truth, pred))
    f1 = float(f1_score(truth, pred, labels=[0, 1], average="weighted", zero_division=0))
    try:
        auc: float | None = weighted_auc(truth, probs)
    except SingleClassInput:
        logger.warning("Only one class present; AUC is undefined")
        auc = None
    return ClassificationReport(accuracy=accuracy, weighted_f1=f1, weighted_auc=auc, n=n)


@dataclass(frozen=True)
class Aggregate:
    """Mean and population standard deviation of one (method, metric) group.

    With pooling "pooled" the statistics run over every record; with
    "per_setting" they run over the per-setting means.
    """

    method: str
    metric: str
    pooling: str
    mean: float
    std: float
    count: int

    def to_record(self) -> EvalRecord:
        return EvalRecord(
            f"{self.metric}_{self.pooling}_mean",
            self.mean,
            {"method": self.method, "std": repr(self.std), "count": str(self.count)},
        )


def _mean_std(values: list[float]) -> tuple[float, float]:
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def summarize(records: Iterable[EvalRecord]) -> list[Aggregate]:
    """Pooled and per-setting-then-averaged statistics per (method, metric).

    Records without a "method" tag are ignored; a missing "setting" tag
    counts as one shared setting. Output is sorted by method, metric, pooling.
    """
    pooled: dict[tuple[str, str], list[float]] = {}
    by_setting: dict[tuple[str, str], dict[str, list[float]]] = {}
    for record in records:
        method = record.context.get("method")
        if method is None:
            continue
        key = (method, record.name)
        pooled.setdefault(key, []).append(record.value)
        setting = record.context.get("setting", "")
        by_setting.setdefault(key, {}).setdefault(setting, []).append(record.value)

    aggregates: list[Aggregate] = []
    for method, metric in sorted(pooled):
        values = pooled[(method, metric)]
        mean, std = _mean_std(values)
        aggregates.append(Aggregate(method, metric, "pooled", mean, std, len(values)))
        setting_means = [
            float(np.mean(v)) for _, v in sorted(by_setting[(method, metric)].items())
        ]
        mean, std = _mean_std(setting_means)
        aggregates.append(
            Aggregate(method, metric, "per_setting", mean, std, len(setting_means))
        )
    return aggregates
