"""Simulation benchmark: recover known directions across settings and repetitions."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from cca_fuse.core.errors import CcaFuseError, InvalidParameters
from cca_fuse.core.graph import GraphLaplacian, laplacian_from_data
from cca_fuse.core.matrix import PreprocessMode, fit_scaler
from cca_fuse.core.metrics import (
    Aggregate,
    EvalRecord,
    correlation_error,
    cosine_distance_abs,
    spectral_frequency_ratio,
    summarize,
)
from cca_fuse.core.parallel import ordered_map
from cca_fuse.core.simulate import (
    Partition,
    SimConfig,
    SimInstance,
    generate,
    repetition_configs,
    split,
)
from cca_fuse.core.storage import write_records
from cca_fuse.experiments.grid import GridSpec, grid_search
from cca_fuse.solvers.embedding import fit_components

logger = logging.getLogger(__name__)

SPLIT_FRACTIONS = (0.5, 0.1, 0.4)
METRICS = ("dcos_u", "dcos_v", "rho_error", "spectral_ratio")


class BenchMethod(NamedTuple):
    """A benchmarked method: its solver and which graph it puts on X."""

    name: str
    solver: str
    graph: str  # "none", "data" or "true"


BENCH_METHODS = {
    "1-SCCA": BenchMethod("1-SCCA", "kscca", "none"),
    "1-GCCA": BenchMethod("1-GCCA", "kgcca", "data"),
    "1-GCCA-Prior": BenchMethod("1-GCCA-Prior", "kgcca", "true"),
}

_ALIASES = {"scca": "1-SCCA", "gcca": "1-GCCA", "gcca-prior": "1-GCCA-Prior"}


def resolve_methods(names: Sequence[str]) -> list[BenchMethod]:
    """Look up benchmark methods by name or short alias, keeping their order."""
    methods = []
    for name in names:
        key = _ALIASES.get(name.lower(), name)
        if key not in BENCH_METHODS:
            raise InvalidParameters(
                f"unknown benchmark method '{name}' (choose from {', '.join(BENCH_METHODS)})"
            )
        methods.append(BENCH_METHODS[key])
    return methods


@dataclass(frozen=True)
class CellFailure:
    setting: str
    repetition: int
    method: str
    error: str


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[EvalRecord, ...] = ()
    failures: tuple[CellFailure, ...] = ()
    aggregates: tuple[Aggregate, ...] = field(default=())

    def aggregate(self, method: str, metric: str, pooling: str = "pooled") -> Aggregate:
        for agg in self.aggregates:
            if (agg.method, agg.metric, agg.pooling) == (method, metric, pooling):
                return agg
        raise KeyError((method, metric, pooling))

    def values(self, method: str, metric: str) -> list[float]:
        return [
            r.value for r in self.records if r.name == metric and r.context["method"] == method
        ]


class _Cell(NamedTuple):
    setting_index: int
    config: SimConfig
    repetition: int


def _centered(instance: SimInstance) -> tuple[Partition, Partition, Partition]:
    """Split 50/10/40 and center every partition with training means."""
    parts = split(instance.x, instance.y, SPLIT_FRACTIONS, instance.config.seed)
    scale_x = fit_scaler(parts.train.x, PreprocessMode.CENTER)
    scale_y = fit_scaler(parts.train.y, PreprocessMode.CENTER)
    train, val, test = (Partition(scale_x.apply(p.x), scale_y.apply(p.y)) for p in parts)
    return train, val, test


def evaluate_direction(
    instance: SimInstance,
    u_hat: np.ndarray,
    v_hat: np.ndarray,
    test: Partition,
) -> dict[str, float]:
    """All four recovery metrics for one estimated pair on the test partition."""
    u_unit = u_hat / np.linalg.norm(u_hat)
    return {
        "dcos_u": cosine_distance_abs(instance.u_true, u_hat),
        "dcos_v": cosine_distance_abs(instance.v_true, v_hat),
        "rho_error": correlation_error(
            instance.u_true, instance.v_true, u_hat, v_hat, test.x, test.y
        ),
        "spectral_ratio": spectral_frequency_ratio(instance.u_true, u_unit, instance.l_true),
    }


def _run_cell(
    cell: _Cell,
    methods: Sequence[BenchMethod],
    grid: GridSpec | None,
) -> tuple[list[EvalRecord], list[CellFailure]]:
    config = cell.config
    setting = config.label
    instance = generate(config)
    train, val, test = _centered(instance)
    search_grid = grid or GridSpec.build(config.p, config.q)

    graphs: dict[str, GraphLaplacian | None] = {"none": None, "true": instance.l_true}
    records: list[EvalRecord] = []
    failures: list[CellFailure] = []
    for method in methods:
        try:
            if method.graph == "data" and "data" not in graphs:
                graphs["data"] = laplacian_from_data(train.x)
            l1 = graphs[method.graph]
            l2 = laplacian_from_data(train.y) if method.graph != "none" else None
            search = grid_search(train, val, l1, l2, search_grid, method.solver, workers=1)
            model = fit_components(train.x, train.y, 1, method.solver, search.best_params, l1, l2)
            scores = evaluate_direction(
                instance,
                np.asarray(model.u_matrix)[:, 0],
                np.asarray(model.v_matrix)[:, 0],
                test,
            )
        except CcaFuseError as e:
            logger.warning(
                "%s rep %d %s failed: %s", setting, cell.repetition, method.name, e
            )
            failures.append(
                CellFailure(setting, cell.repetition, method.name, f"{type(e).__name__}: {e}")
            )
            continue

        context = {
            "setting": setting,
            "rep": str(cell.repetition),
            "seed": str(config.seed),
            "method": method.name,
        }
        records.extend(EvalRecord(name, scores[name], context) for name in METRICS)

    logger.info("Finished %s repetition %d", setting, cell.repetition)
    return records, failures


def run_simulation_benchmark(
    settings: Sequence[SimConfig],
    repetitions: int,
    methods: Sequence[str] = tuple(BENCH_METHODS),
    grid: GridSpec | None = None,
    output: Path | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    """Generate, split, tune and score every method on every (setting, repetition).

    Repetition r of a setting uses seed setting.seed + r. Records come out
    in (setting, repetition, method) order whatever the worker count, and
    per-cell failures are recorded without stopping the run. When grid is
    None each setting gets the default grid for its dimensions.
    """
    if repetitions < 0:
        raise InvalidParameters(f"repetitions must be non-negative, got {repetitions}")
    chosen = resolve_methods(methods)
    cells = [
        _Cell(i, cfg, r)
        for i, setting in enumerate(settings)
        for r, cfg in enumerate(repetition_configs(setting, repetitions))
    ]
    logger.info(
        "Benchmarking %d methods over %d settings x %d repetitions",
        len(chosen),
        len(settings),
        repetitions,
    )

    outcomes = ordered_map(lambda cell: _run_cell(cell, chosen, grid), cells, workers)
    records = tuple(r for cell_records, _ in outcomes for r in cell_records)
    failures = tuple(f for _, cell_failures in outcomes for f in cell_failures)
    result = ExperimentResult(records, failures, tuple(summarize(records)))

    if output is not None:
        write_records(output, [*result.records, *(a.to_record() for a in result.aggregates)])
    return result
