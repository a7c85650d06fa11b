"""Tests for the simulation benchmark."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from cca_fuse.core.errors import InvalidParameters
from cca_fuse.core.metrics import summarize
from cca_fuse.core.simulate import SimConfig, default_settings, generate, split
from cca_fuse.experiments.benchmark import (
    METRICS,
    evaluate_direction,
    resolve_methods,
    run_simulation_benchmark,
)
from cca_fuse.experiments.grid import GridSpec
from cca_fuse.solvers.gcca import GccaParams
from cca_fuse.solvers.scca import SccaParams

ONE_POINT = GridSpec.single(GccaParams.symmetric(1.0, 0.1, 0.1), SccaParams(2.0, 2.0))


def test_resolve_methods() -> None:
    methods = resolve_methods(["gcca-prior", "1-SCCA"])
    assert [m.name for m in methods] == ["1-GCCA-Prior", "1-SCCA"]
    assert methods[0].graph == "true"
    with pytest.raises(InvalidParameters):
        resolve_methods(["pls"])


def test_zero_repetitions(temp_dir: Path) -> None:
    output = temp_dir / "bench.csv"
    result = run_simulation_benchmark([SimConfig(n=50, p=10, q=10, l=2)], 0, output=output)
    assert result.records == ()
    assert result.aggregates == ()
    assert output.read_text(encoding="utf-8") == ""


def test_true_directions_score_zero() -> None:
    instance = generate(SimConfig(n=60, p=10, q=10, l=3, sigma=0.5, seed=4))
    test = split(instance.x, instance.y).test
    scores = evaluate_direction(instance, instance.u_true, instance.v_true, test)
    assert set(scores) == set(METRICS)
    for value in scores.values():
        assert value == pytest.approx(0.0, abs=1e-12)


def test_near_noiseless_recovery() -> None:
    """With almost no noise the estimated variates keep the true correlation."""
    setting = SimConfig(n=200, p=20, q=20, l=5, sigma=1e-8)
    result = run_simulation_benchmark([setting], 3, ["1-GCCA-Prior"], ONE_POINT, workers=1)
    assert result.failures == ()
    errors = result.values("1-GCCA-Prior", "rho_error")
    assert len(errors) == 3
    assert float(np.mean(errors)) <= 0.05


def test_aggregates_recompute_from_records() -> None:
    setting = SimConfig(n=60, p=8, q=8, l=2, sigma=0.5)
    result = run_simulation_benchmark([setting], 2, ["1-GCCA", "1-SCCA"], ONE_POINT, workers=1)
    assert list(result.aggregates) == summarize(result.records)

    pooled = result.aggregate("1-GCCA", "dcos_u")
    values = result.values("1-GCCA", "dcos_u")
    assert pooled.count == 2
    assert pooled.mean == pytest.approx(float(np.mean(values)))

    first = result.records[0]
    assert first.context["setting"] == "l=2 sigma=0.5"
    assert first.context["rep"] == "0"
    assert first.context["method"] == "1-GCCA"


def test_output_is_independent_of_worker_count(temp_dir: Path) -> None:
    settings = [
        SimConfig(n=60, p=8, q=8, l=2, sigma=0.5, seed=1),
        SimConfig(n=60, p=8, q=8, l=3, sigma=0.75, seed=1),
    ]
    serial, parallel = temp_dir / "serial.csv", temp_dir / "parallel.csv"
    run_simulation_benchmark(settings, 2, grid=ONE_POINT, output=serial, workers=1)
    run_simulation_benchmark(settings, 2, grid=ONE_POINT, output=parallel, workers=2)
    assert serial.read_bytes() == parallel.read_bytes()
    assert serial.read_bytes()


def test_negative_repetitions() -> None:
    with pytest.raises(InvalidParameters):
        run_simulation_benchmark([SimConfig()], -1)


@pytest.mark.slow
def test_prior_graph_recovers_correlation_across_default_settings() -> None:
    """Eight settings by five repetitions with each setting's default grid."""
    methods = ["1-GCCA-Prior", "1-SCCA"]
    result = run_simulation_benchmark(default_settings(), 5, methods)
    assert result.failures == ()
    assert len(result.records) == 8 * 5 * len(methods) * len(METRICS)
    assert result.aggregate("1-GCCA-Prior", "rho_error").mean <= 0.15
    for method in methods:
        assert result.aggregate(method, "dcos_v").count == 40
