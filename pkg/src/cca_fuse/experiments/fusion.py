"""Fit-embed-classify pipeline with single-modality and early/late fusion baselines."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from sklearn.model_selection import KFold

from cca_fuse.core.config import Config
from cca_fuse.core.errors import CcaFuseError, ConstantInput, InvalidParameters, TooFewSamples
from cca_fuse.core.forest import ForestConfig, permutation_null, predict_forest, train_forest
from cca_fuse.core.graph import (
    EdgeList,
    GraphLaplacian,
    laplacian_from_data,
    laplacian_from_edges,
)
from cca_fuse.core.matrix import (
    DataMatrix,
    FloatArray,
    PreprocessMode,
    fit_scaler,
    require_paired,
)
from cca_fuse.core.metrics import (
    ClassificationReport,
    EvalRecord,
    classification_metrics,
    pearson,
    sum_correlations,
)
from cca_fuse.core.simulate import make_rng, split_indices
from cca_fuse.core.storage import (
    labels_for,
    read_edges,
    read_labels,
    read_matrix,
    write_records,
)
from cca_fuse.experiments.grid import GridSpec, grid_search
from cca_fuse.solvers.deflation import DeflationMode
from cca_fuse.solvers.embedding import EmbeddingModel, fit_components, transform
from cca_fuse.solvers.gcca import GccaParams
from cca_fuse.solvers.scca import SccaParams

logger = logging.getLogger(__name__)

FUSION_METHODS = ("kgcca", "kgcca-prior", "kscca")
BASELINES = ("genomics", "imaging", "early", "late")
# Share of a training fold kept for fitting when tuning needs a validation slice
INNER_TRAIN_FRACTION = 0.8


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag CcaFuseErrors raised inside the block with the pipeline stage."""
    try:
        yield
    except CcaFuseError as e:
        if e.stage is None:
            e.stage = name
            e.add_note(f"during pipeline stage '{name}'")
        raise


@dataclass(frozen=True)
class FoldPlan:
    index: int
    train: NDArray[np.intp] = field(repr=False)
    test: NDArray[np.intp] = field(repr=False)
    # Validation slice for tuning; None means tuning carves one out of train
    val: NDArray[np.intp] | None = field(default=None, repr=False)


def plan_folds(
    n: int,
    cv: str = "kfold",
    folds: int = 5,
    fractions: Sequence[float] = (0.5, 0.1, 0.4),
    seed: int = 0,
) -> list[FoldPlan]:
    """Seeded K-fold assignment, or a single fixed train/val/test split."""
    if cv == "fixed":
        train, val, test = split_indices(n, (fractions[0], fractions[1], fractions[2]), seed)
        return [FoldPlan(0, train, test, val)]
    if cv != "kfold":
        raise InvalidParameters(f"cv must be 'kfold' or 'fixed', got '{cv}'")
    if not 2 <= folds <= n:
        raise InvalidParameters(f"folds must lie in [2, {n}], got {folds}")

    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [
        FoldPlan(i, np.sort(train), np.sort(test))
        for i, (train, test) in enumerate(splitter.split(np.zeros((n, 1))))
    ]


@dataclass(frozen=True)
class Prediction:
    method: str
    fold: int
    sample_id: str
    label: int
    predicted: int
    score: float


CORRELATION_METRICS = ("test_rho", "test_sum_rho")


@dataclass(frozen=True)
class MethodResult:
    """Per-fold classification reports and, for fusion methods, test correlations."""

    method: str
    folds: tuple[ClassificationReport, ...]
    correlations: tuple[dict[str, float], ...] = ()

    def values(self, metric: str) -> list[float]:
        if metric in CORRELATION_METRICS:
            return [fold[metric] for fold in self.correlations if metric in fold]
        found = [getattr(report, metric) for report in self.folds]
        return [v for v in found if v is not None]

    def mean(self, metric: str) -> float:
        values = self.values(metric)
        return float(np.mean(values)) if values else float("nan")

    def std(self, metric: str) -> float:
        values = self.values(metric)
        return float(np.std(values)) if values else float("nan")


@dataclass(frozen=True)
class FusionResult:
    methods: tuple[MethodResult, ...]
    predictions: tuple[Prediction, ...]
    models: tuple[EmbeddingModel, ...] = ()
    null_f1: FloatArray | None = field(default=None, repr=False)

    def get(self, method: str) -> MethodResult:
        for result in self.methods:
            if result.method == method:
                return result
        raise KeyError(method)

    @property
    def null_f1_95(self) -> float | None:
        if self.null_f1 is None:
            return None
        return float(np.percentile(self.null_f1, 95))

    def records(self) -> list[EvalRecord]:
        """Per-fold metrics followed by per-method means."""
        out: list[EvalRecord] = []
        for result in self.methods:
            for fold, report in enumerate(result.folds):
                context = {"method": result.method, "fold": str(fold)}
                out.extend(EvalRecord(k, v, context) for k, v in report.as_dict().items())
            for fold, values in enumerate(result.correlations):
                context = {"method": result.method, "fold": str(fold)}
                out.extend(EvalRecord(k, v, context) for k, v in sorted(values.items()))
        for result in self.methods:
            for metric in ("accuracy", "weighted_f1", "weighted_auc", *CORRELATION_METRICS):
                mean = result.mean(metric)
                if np.isfinite(mean):
                    std = result.std(metric)
                    out.append(
                        EvalRecord(
                            f"{metric}_mean",
                            mean,
                            {"method": result.method, "std": repr(std)},
                        )
                    )
        if self.null_f1 is not None:
            out.append(EvalRecord("null_weighted_f1_p95", float(self.null_f1_95 or 0.0), {}))
        return out


class FoldData:
    """One fold's preprocessed partitions.

    The raw matrices are kept so tuning can refit its scalers on the
    tuning-train rows alone.
    """

    def __init__(
        self,
        x: DataMatrix,
        y: DataMatrix,
        labels: NDArray[np.int64],
        plan: FoldPlan,
        config: Config,
    ) -> None:
        self.plan = plan
        self.config = config
        self.raw_x = x
        self.raw_y = y
        train = plan.train if plan.val is None else np.concatenate([plan.train, plan.val])
        self.fit_idx = train
        self.labels_train = labels[train]
        self.labels_test = labels[plan.test]
        self.x, self.y = self._scaled(train)
        self.x_train = self.x.select_samples(train)
        self.y_train = self.y.select_samples(train)
        self.x_test = self.x.select_samples(plan.test)
        self.y_test = self.y.select_samples(plan.test)

    @property
    def workers(self) -> int | None:
        return self.config.threads or None

    def _scaled(self, rows: NDArray[np.intp]) -> tuple[DataMatrix, DataMatrix]:
        """Both modalities scaled with statistics from the given rows only."""
        with stage("preprocess"):
            mode_x = _preprocess_mode(self.config.pipeline.preprocess_x)
            mode_y = _preprocess_mode(self.config.pipeline.preprocess_y)
            scale_x = fit_scaler(self.raw_x.select_samples(rows), mode_x)
            scale_y = fit_scaler(self.raw_y.select_samples(rows), mode_y)
            return scale_x.apply(self.raw_x), scale_y.apply(self.raw_y)

    def tuning_split(
        self,
    ) -> tuple[tuple[DataMatrix, DataMatrix], tuple[DataMatrix, DataMatrix]]:
        if self.plan.val is not None:
            tr, va = self.plan.train, self.plan.val
        else:
            n = self.fit_idx.shape[0]
            cut = int(np.floor(n * INNER_TRAIN_FRACTION))
            if cut < 2 or n - cut < 2:
                raise TooFewSamples(f"training fold of {n} samples is too small to tune")
            order = make_rng([self.config.pipeline.seed, self.plan.index]).permutation(n)
            tr, va = self.fit_idx[order[:cut]], self.fit_idx[order[cut:]]
        x, y = self._scaled(tr)
        return (
            (x.select_samples(tr), y.select_samples(tr)),
            (x.select_samples(va), y.select_samples(va)),
        )


def _preprocess_mode(name: str) -> PreprocessMode:
    try:
        return PreprocessMode(name)
    except ValueError as e:
        choices = ", ".join(m.value for m in PreprocessMode)
        raise InvalidParameters(f"unknown preprocessing '{name}' (choose from {choices})") from e


def _classify(
    z_train: ArrayLike,
    labels_train: NDArray[np.int64],
    z_test: ArrayLike,
    forest: ForestConfig,
    workers: int | None = None,
) -> tuple[NDArray[np.int64], FloatArray]:
    with stage("classify"):
        model = train_forest(z_train, labels_train, forest, workers)
        prediction = predict_forest(model, z_test)
    return prediction.labels, np.asarray(prediction.scores)


def _graphs(
    x_train: DataMatrix,
    y_train: DataMatrix,
    method: str,
    edges: EdgeList | None,
    cutoff: float,
) -> tuple[GraphLaplacian | None, GraphLaplacian | None]:
    if method == "kscca":
        return None, None
    with stage("graph"):
        if method == "kgcca-prior":
            if edges is None:
                raise InvalidParameters("kgcca-prior needs an edge list")
            l1 = laplacian_from_edges(edges, x_train.feature_names).laplacian
        else:
            l1 = laplacian_from_data(x_train, cutoff)
        l2 = laplacian_from_data(y_train, cutoff)
    return l1, l2


def _params(fold: FoldData, method: str, edges: EdgeList | None) -> GccaParams | SccaParams:
    """Configured parameters, or the grid winner when tuning is on.

    Tuning scales and builds data graphs from the tuning-train rows only.
    """
    config = fold.config
    solver = "kscca" if method == "kscca" else "kgcca"
    if not config.pipeline.tune:
        if solver == "kscca":
            return config.scca.params(fold.x.n_features, fold.y.n_features)
        return config.solver.params()

    with stage("tune"):
        grid = GridSpec.build(
            fold.x.n_features,
            fold.y.n_features,
            alpha=config.grid.alpha,
            beta=config.grid.beta,
            lam=config.grid.lambda_,
            full=config.grid.full,
            bound_fractions=config.grid.bound_fractions,
            selection_metric=config.grid.selection_metric,
        )
        train, val = fold.tuning_split()
        l1, l2 = _graphs(train[0], train[1], method, edges, config.pipeline.graph_cutoff)
        k = min(config.pipeline.k, train[0].n_features, train[1].n_features, train[0].n_samples)
        search = grid_search(train, val, l1, l2, grid, solver, k=k, workers=fold.workers)
    logger.info("Fold %d: %s tuned to %s", fold.plan.index, method, search.best_params)
    return search.best_params


def _component_count(fold: FoldData) -> int:
    requested = fold.config.pipeline.k
    limit = min(fold.x_train.n_features, fold.y_train.n_features, fold.x_train.n_samples)
    if requested > limit:
        logger.warning("Fold %d: k=%d capped at %d", fold.plan.index, requested, limit)
        return limit
    return requested


def _test_correlations(model: EmbeddingModel, fold: FoldData) -> dict[str, float]:
    """Held-out first-component and summed canonical correlations."""
    values = {"test_sum_rho": sum_correlations(model, fold.x_test, fold.y_test)}
    u1 = np.asarray(model.u_matrix)[:, 0]
    v1 = np.asarray(model.v_matrix)[:, 0]
    try:
        values["test_rho"] = pearson(u1 @ fold.x_test.values, v1 @ fold.y_test.values)
    except ConstantInput:
        logger.warning("Fold %d: first test variate is constant", fold.plan.index)
    return values


@dataclass(frozen=True)
class _FusionOutcome:
    labels: NDArray[np.int64]
    scores: FloatArray
    model: EmbeddingModel
    z_train: FloatArray
    z_test: FloatArray
    correlations: dict[str, float]


def _fusion_fold(fold: FoldData, method: str, edges: EdgeList | None) -> _FusionOutcome:
    config = fold.config
    params = _params(fold, method, edges)
    l1, l2 = _graphs(fold.x_train, fold.y_train, method, edges, config.pipeline.graph_cutoff)
    solver = "kscca" if method == "kscca" else "kgcca"
    with stage("fit"):
        model = fit_components(
            fold.x_train,
            fold.y_train,
            _component_count(fold),
            solver,
            params,
            l1,
            l2,
            DeflationMode(config.solver.deflation),
        )
    with stage("transform"):
        z_train = np.asarray(transform(model, fold.x_train, fold.y_train).z)
        z_test = np.asarray(transform(model, fold.x_test, fold.y_test).z)
    with stage("evaluate"):
        correlations = _test_correlations(model, fold)
    labels, scores = _classify(z_train, fold.labels_train, z_test, config.forest, fold.workers)
    return _FusionOutcome(labels, scores, model, z_train, z_test, correlations)


def _baseline_fold(fold: FoldData, method: str) -> tuple[NDArray[np.int64], FloatArray]:
    forest = fold.config.forest
    workers = fold.workers
    if method == "genomics":
        return _classify(
            fold.x_train.values, fold.labels_train, fold.x_test.values, forest, workers
        )
    if method == "imaging":
        return _classify(
            fold.y_train.values, fold.labels_train, fold.y_test.values, forest, workers
        )
    if method == "early":
        with stage("early-fusion"):
            z_train = fold.x_train.stack(fold.y_train).values
            z_test = fold.x_test.stack(fold.y_test).values
        return _classify(z_train, fold.labels_train, z_test, forest, workers)
    # late fusion averages the two single-modality forests' scores
    _, x_scores = _baseline_fold(fold, "genomics")
    _, y_scores = _baseline_fold(fold, "imaging")
    scores = (x_scores + y_scores) / 2
    return (scores >= 0.5).astype(np.int64), scores


def run_fusion(
    x: DataMatrix,
    y: DataMatrix,
    labels: ArrayLike,
    config: Config | None = None,
    edges: EdgeList | None = None,
    methods: Sequence[str] | None = None,
) -> FusionResult:
    """Cross-validated classification from fused embeddings and baselines.

    methods defaults to the configured fusion method followed by the
    configured baselines. Folds run in order; the forest parallelizes
    over trees.
    """
    config = config or Config()
    pipeline = config.pipeline
    names = list(methods) if methods is not None else [pipeline.method, *pipeline.baselines]
    for name in names:
        if name not in FUSION_METHODS and name not in BASELINES:
            raise InvalidParameters(
                f"unknown method '{name}' (choose from {', '.join(FUSION_METHODS + BASELINES)})"
            )
    with stage("load"):
        require_paired(x, y)
        y_all = np.asarray(labels, dtype=np.int64).reshape(-1)
        if y_all.shape[0] != x.n_samples:
            raise InvalidParameters(f"{y_all.shape[0]} labels for {x.n_samples} samples")

    plans = plan_folds(x.n_samples, pipeline.cv, pipeline.folds, pipeline.fractions, pipeline.seed)
    reports: dict[str, list[ClassificationReport]] = {name: [] for name in names}
    correlations: dict[str, list[dict[str, float]]] = {name: [] for name in names}
    predictions: list[Prediction] = []
    models: list[EmbeddingModel] = []
    null_runs: list[FloatArray] = []

    for plan in plans:
        fold = FoldData(x, y, y_all, plan, config)
        for name in names:
            if name in FUSION_METHODS:
                outcome = _fusion_fold(fold, name, edges)
                pred, scores = outcome.labels, outcome.scores
                models.append(outcome.model)
                correlations[name].append(outcome.correlations)
                if pipeline.permutations > 0 and name == names[0]:
                    with stage("permutation-null"):
                        null_runs.append(
                            permutation_null(
                                outcome.z_train,
                                fold.labels_train,
                                outcome.z_test,
                                fold.labels_test,
                                config.forest,
                                pipeline.permutations,
                                seed=pipeline.seed + plan.index,
                                workers=fold.workers,
                            )
                        )
            else:
                pred, scores = _baseline_fold(fold, name)
            with stage("evaluate"):
                reports[name].append(classification_metrics(fold.labels_test, pred, scores))
            ids = fold.x_test.sample_ids
            predictions.extend(
                Prediction(name, plan.index, sid, int(t), int(p), float(s))
                for sid, t, p, s in zip(ids, fold.labels_test, pred, scores, strict=True)
            )
        logger.info("Finished fold %d of %d", plan.index + 1, len(plans))

    null_f1 = np.mean(np.vstack(null_runs), axis=0) if null_runs else None
    return FusionResult(
        methods=tuple(
            MethodResult(name, tuple(reports[name]), tuple(correlations[name])) for name in names
        ),
        predictions=tuple(predictions),
        models=tuple(models),
        null_f1=null_f1,
    )


def write_predictions(path: Path, predictions: Sequence[Prediction]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["method,fold,sample_id,label,predicted,score\n"]
    lines.extend(
        f"{p.method},{p.fold},{p.sample_id},{p.label},{p.predicted},{p.score!r}\n"
        for p in predictions
    )
    path.write_text("".join(lines), encoding="utf-8")


def run_fusion_pipeline(
    x_path: Path,
    y_path: Path,
    labels_path: Path,
    edge_path: Path | None = None,
    config: Config | None = None,
    output_dir: Path | None = None,
    methods: Sequence[str] | None = None,
) -> FusionResult:
    """File-based run_fusion: read inputs, run, and write metrics and predictions."""
    with stage("load"):
        x = read_matrix(x_path)
        y = read_matrix(y_path)
        require_paired(x, y)
        labels = labels_for(read_labels(labels_path), x.sample_ids)
        edges = read_edges(edge_path) if edge_path is not None else None

    result = run_fusion(x, y, labels, config, edges, methods)

    if output_dir is not None:
        with stage("write"):
            write_records(output_dir / "metrics.csv", result.records())
            write_predictions(output_dir / "predictions.csv", result.predictions)
    return result
