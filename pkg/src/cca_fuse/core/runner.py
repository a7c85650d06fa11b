"""Main orchestration for cca-fuse subcommands."""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from cca_fuse.core.config import Config
from cca_fuse.core.errors import (
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_USAGE,
    CcaFuseError,
    ConfigError,
    InvalidParameters,
)
from cca_fuse.core.graph import (
    GraphLaplacian,
    laplacian_from_data,
    laplacian_from_edges,
    laplacian_to_edges,
    validate_laplacian,
)
from cca_fuse.core.matrix import DataMatrix, PreprocessMode, preprocess, require_paired
from cca_fuse.core.simulate import SimConfig, generate, labels_from_weights, settings_preset
from cca_fuse.core.storage import (
    load_model,
    read_edges,
    read_matrix,
    save_model,
    write_edges,
    write_embedding,
    write_json,
    write_labels,
    write_matrix,
)
from cca_fuse.experiments.benchmark import BENCH_METHODS, run_simulation_benchmark
from cca_fuse.experiments.fusion import run_fusion_pipeline, stage
from cca_fuse.experiments.grid import GridSpec
from cca_fuse.solvers.deflation import DeflationMode
from cca_fuse.solvers.embedding import fit_components, transform

logger = logging.getLogger(__name__)

# Exit codes
EXIT_SUCCESS = 0
__all__ = ["EXIT_DATA", "EXIT_NUMERICAL", "EXIT_SUCCESS", "EXIT_USAGE", "Runner", "RunnerOptions"]


@dataclass
class RunnerOptions:
    """Options for the runner; fields unused by a subcommand stay at their defaults."""

    command: str = ""
    config_path: Path | None = None
    threads: int | None = None
    out: Path | None = None
    seed: int | None = None

    # simulate
    n: int = 1000
    p: int = 100
    q: int = 100
    l: int = 5  # noqa: E741
    sigma: float = 0.5

    # bench
    settings: str = "default"
    reps: int = 25
    methods: list[str] = field(default_factory=lambda: list(BENCH_METHODS))
    full_grid: bool = False

    # fit / transform / predict / validate-graph
    x: Path | None = None
    y: Path | None = None
    labels: Path | None = None
    edges: Path | None = None
    model: Path | None = None
    data: Path | None = None
    features: Path | None = None
    method: str | None = None
    k: int | None = None
    preprocess: str | None = None
    cv: str | None = None
    folds: int | None = None
    baselines: list[str] | None = None
    tune: bool = False
    permutations: int | None = None


class Runner:
    """Main orchestration class for cca-fuse."""

    def __init__(self, options: RunnerOptions | None = None) -> None:
        self.options = options or RunnerOptions()
        self.config: Config | None = None

    def setup(self) -> None:
        """Load config and apply command-line overrides."""
        path = self.options.config_path
        if path is not None and not path.exists():
            raise ConfigError(f"config file not found: {path}")
        config = Config.load(path)

        pipeline = config.pipeline
        opts = self.options
        if opts.method is not None:
            pipeline.method = opts.method
        if opts.k is not None:
            pipeline.k = opts.k
        if opts.preprocess is not None:
            pipeline.preprocess_x = pipeline.preprocess_y = opts.preprocess
        if opts.cv is not None:
            pipeline.cv = opts.cv
        if opts.folds is not None:
            pipeline.folds = opts.folds
        if opts.baselines is not None:
            pipeline.baselines = opts.baselines
        if opts.tune:
            pipeline.tune = True
        if opts.permutations is not None:
            pipeline.permutations = opts.permutations
        if opts.seed is not None:
            pipeline.seed = opts.seed
        if opts.full_grid:
            config.grid.full = True
        if opts.threads is not None:
            config.threads = opts.threads

        self.config = config

    def run(self) -> int:
        """Run the selected subcommand. Returns exit code."""
        handlers = {
            "simulate": self._simulate,
            "bench": self._bench,
            "fit": self._fit,
            "transform": self._transform,
            "predict": self._predict,
            "validate-graph": self._validate_graph,
        }
        handler = handlers.get(self.options.command)
        if handler is None:
            print(f"Error: unknown command '{self.options.command}'", file=sys.stderr)
            return EXIT_USAGE

        try:
            self.setup()
            return handler()
        except CcaFuseError as e:
            print(f"Error: {self._describe(e)}", file=sys.stderr)
            return e.exit_code

    @staticmethod
    def _describe(error: CcaFuseError) -> str:
        message = f"{type(error).__name__}: {error}"
        if error.stage is not None:
            message = f"[{error.stage}] {message}"
        if error.component is not None:
            message += f" (component {error.component + 1})"
        return message

    def _require(self, name: str) -> Path:
        value = getattr(self.options, name)
        if value is None:
            raise InvalidParameters(f"--{name} is required for {self.options.command}")
        assert isinstance(value, Path)
        return value

    def _simulate(self) -> int:
        opts = self.options
        out = self._require("out")
        config = SimConfig(
            n=opts.n, p=opts.p, q=opts.q, l=opts.l, sigma=opts.sigma, seed=opts.seed or 0
        )
        instance = generate(config)

        write_matrix(out / "x.csv", instance.x)
        write_matrix(out / "y.csv", instance.y)
        labels = labels_from_weights(instance.weights)
        write_labels(out / "labels.csv", instance.x.sample_ids, labels)
        write_edges(out / "graph_x.tsv", laplacian_to_edges(instance.l_true))
        write_json(
            out / "truth.json",
            {
                "n": config.n,
                "p": config.p,
                "q": config.q,
                "l": config.l,
                "sigma": config.sigma,
                "seed": config.seed,
                "u_true": instance.u_true.tolist(),
                "v_true": instance.v_true.tolist(),
                "weights": instance.weights.tolist(),
            },
        )
        print(f"Wrote {config.n} samples ({config.p} X features, {config.q} Y features) to {out}")
        return EXIT_SUCCESS

    def _bench(self) -> int:
        assert self.config is not None
        opts = self.options
        out = self._require("out")
        settings = settings_preset(opts.settings, opts.seed or 0)

        grid_config = self.config.grid
        dims = {(s.p, s.q) for s in settings}
        grid = None
        if len(dims) == 1:
            p, q = dims.pop()
            grid = GridSpec.build(
                p,
                q,
                grid_config.alpha,
                grid_config.beta,
                grid_config.lambda_,
                full=grid_config.full,
                bound_fractions=grid_config.bound_fractions,
                selection_metric=grid_config.selection_metric,
            )
        result = run_simulation_benchmark(
            settings,
            opts.reps,
            methods=opts.methods,
            grid=grid,
            output=out,
            workers=self.config.threads or None,
        )
        for failure in result.failures:
            print(
                f"Warning: {failure.setting} rep {failure.repetition} "
                f"{failure.method}: {failure.error}",
                file=sys.stderr,
            )
        for agg in result.aggregates:
            if agg.pooling == "pooled":
                print(f"{agg.method:<14} {agg.metric:<15} {agg.mean:.4f} ± {agg.std:.4f}")
        return EXIT_SUCCESS

    def _load_pair(self) -> tuple[DataMatrix, DataMatrix]:
        with stage("load"):
            x = read_matrix(self._require("x"))
            y = read_matrix(self._require("y"))
            require_paired(x, y)
        return x, y

    def _fit(self) -> int:
        assert self.config is not None
        config = self.config
        pipeline = config.pipeline
        out = self._require("out")
        x, y = self._load_pair()

        with stage("preprocess"):
            x = preprocess(x, PreprocessMode(pipeline.preprocess_x))
            y = preprocess(y, PreprocessMode(pipeline.preprocess_y))

        method = pipeline.method
        l1: GraphLaplacian | None = None
        l2: GraphLaplacian | None = None
        with stage("graph"):
            if method == "kgcca-prior":
                edges = read_edges(self._require("edges"))
                l1 = laplacian_from_edges(edges, x.feature_names).laplacian
            elif method == "kgcca":
                l1 = laplacian_from_data(x, pipeline.graph_cutoff)
            elif method != "kscca":
                raise InvalidParameters(f"unknown method '{method}'")
            if l1 is not None:
                l2 = laplacian_from_data(y, pipeline.graph_cutoff)

        solver = "kscca" if method == "kscca" else "kgcca"
        params = (
            config.scca.params(x.n_features, y.n_features)
            if solver == "kscca"
            else config.solver.params()
        )
        with stage("fit"):
            model = fit_components(
                x, y, pipeline.k, solver, params, l1, l2, DeflationMode(config.solver.deflation)
            )
        save_model(out, model)
        logger.info("Saved %d-component %s model to %s", model.k, method, out)
        for i, rho in enumerate(model.per_component_rho, start=1):
            print(f"component {i}: rho = {rho:.6f}")
        return EXIT_SUCCESS

    def _transform(self) -> int:
        assert self.config is not None
        out = self._require("out")
        with stage("load"):
            model = load_model(self._require("model"))
        x, y = self._load_pair()
        mode = PreprocessMode(self.options.preprocess or "none")
        with stage("transform"):
            embedding = transform(model, preprocess(x, mode), preprocess(y, mode))
        write_embedding(out, embedding)
        print(f"Wrote {2 * embedding.k}x{len(embedding.sample_ids)} embedding to {out}")
        return EXIT_SUCCESS

    def _predict(self) -> int:
        assert self.config is not None
        result = run_fusion_pipeline(
            self._require("x"),
            self._require("y"),
            self._require("labels"),
            self.options.edges,
            self.config,
            self.options.out,
        )
        for method in result.methods:
            line = (
                f"{method.method:<12} accuracy {method.mean('accuracy'):.4f}  "
                f"weighted_f1 {method.mean('weighted_f1'):.4f} ± {method.std('weighted_f1'):.4f}"
            )
            print(line)
        if result.null_f1 is not None:
            print(f"permutation null weighted_f1 95th percentile {result.null_f1_95:.4f}")
        return EXIT_SUCCESS

    def _validate_graph(self) -> int:
        assert self.config is not None
        opts = self.options
        if opts.data is not None:
            cutoff = self.config.pipeline.graph_cutoff
            laplacian = laplacian_from_data(read_matrix(opts.data), cutoff)
        elif opts.edges is not None:
            edges = read_edges(opts.edges)
            if opts.features is not None:
                names = list(read_matrix(opts.features).feature_names)
            else:
                names = sorted({n for e in edges.edges for n in (e.node_a, e.node_b)})
            graph = laplacian_from_edges(edges, names)
            if graph.skipped_edges:
                print(f"Skipped {graph.skipped_edges} edges with unknown endpoints")
            laplacian = graph.laplacian
        else:
            raise InvalidParameters("validate-graph needs --data or --edges")

        report = validate_laplacian(laplacian)
        print(report.format())
        return EXIT_SUCCESS if report.passed else EXIT_DATA
