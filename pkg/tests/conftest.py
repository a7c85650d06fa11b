"""Pytest configuration and fixtures."""

from __future__ import annotations

import tempfile
from collections.abc import Callable, Generator
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

from cca_fuse.core.matrix import DataMatrix, preprocess
from cca_fuse.core.parallel import THREADS_ENV
from cca_fuse.core.simulate import make_rng

PairFactory = Callable[..., tuple[DataMatrix, DataMatrix]]


@pytest.fixture(autouse=True)
def sandbox_environment(monkeypatch: pytest.MonkeyPatch) -> Generator[Path, None, None]:
    """Sandbox all tests away from the real config directory and thread settings."""
    monkeypatch.delenv(THREADS_ENV, raising=False)
    with tempfile.TemporaryDirectory() as tmpdir:
        sandbox = Path(tmpdir)
        config_dir = sandbox / "config"
        config_dir.mkdir()

        with patch("cca_fuse.core.config.get_config_dir", return_value=config_dir):
            yield sandbox


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240601)


def make_matrix(values: np.ndarray, prefix: str = "f") -> DataMatrix:
    """Wrap a features×samples array with generated names."""
    rows, cols = values.shape
    return DataMatrix(
        values,
        [f"{prefix}{i}" for i in range(rows)],
        [f"s{j}" for j in range(cols)],
    )


@pytest.fixture
def latent_pair() -> PairFactory:
    """Factory for centered X, Y sharing latent factors.

    Each latent factor loads on one orthogonal direction per modality with
    the given strength; noise is iid with scale noise.
    """

    def build(
        seed: int,
        p: int = 8,
        q: int = 6,
        n: int = 300,
        strengths: tuple[float, ...] = (3.0,),
        noise: float = 1.0,
    ) -> tuple[DataMatrix, DataMatrix]:
        gen = make_rng(seed)
        latent = gen.standard_normal((len(strengths), n))
        load_x = np.linalg.qr(gen.standard_normal((p, len(strengths))))[0]
        load_y = np.linalg.qr(gen.standard_normal((q, len(strengths))))[0]
        scale = np.asarray(strengths)[:, None]
        x = load_x @ (scale * latent) + noise * gen.standard_normal((p, n))
        y = load_y @ (scale * latent) + noise * gen.standard_normal((q, n))
        return (
            preprocess(make_matrix(x, "x"), "center"),
            preprocess(make_matrix(y, "y"), "center"),
        )

    return build
