"""Tests for configuration loading."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from cca_fuse.core.config import Config, SccaConfig, SolverConfig, get_config_dir, l1_bound
from cca_fuse.core.errors import ConfigError
from cca_fuse.core.forest import FeatureSampling
from cca_fuse.solvers.gcca import GccaParams


def test_default_config() -> None:
    """Test that default config has sensible values."""
    config = Config()

    assert config.solver.params() == GccaParams(1.0, 0.1, 0.1, 1.0, 0.1, 0.1)
    assert config.solver.deflation == "projective"
    assert config.grid.alpha == [0.01, 0.1, 1.0, 10.0]
    assert config.grid.full is False
    assert config.pipeline.k == 100
    assert config.pipeline.cv == "kfold"
    assert config.forest.n_trees == 100
    assert config.threads == 0


def test_config_from_dict() -> None:
    """Test creating config from dictionary."""
    data = {
        "solver": {"beta1": 0.5, "max_iter": 50},
        "grid": {"alpha": [1.0], "full": True},
        "forest": {"n_trees": 10, "features_per_split": "all"},
        "pipeline": {"k": 3, "baselines": ["early"]},
        "threads": 2,
    }

    config = Config.from_dict(data)

    assert config.solver.beta1 == 0.5
    assert config.solver.params().max_iter == 50
    assert config.grid.alpha == [1.0]
    assert config.grid.full is True
    assert config.forest.features_per_split is FeatureSampling.ALL
    assert config.pipeline.baselines == ["early"]
    assert config.threads == 2


def test_config_rejects_unknown_keys() -> None:
    with pytest.raises(ConfigError, match="colour"):
        Config.from_dict({"colour": "blue"})
    with pytest.raises(ConfigError, match=r"\[solver\]"):
        Config.from_dict({"solver": {"gamma": 1.0}})


def test_config_rejects_bad_values() -> None:
    with pytest.raises(ConfigError):
        Config.from_dict({"forest": {"n_trees": 0}})
    with pytest.raises(ConfigError):
        Config.from_dict({"pipeline": "fast"})
    with pytest.raises(ConfigError):
        Config.from_dict({"threads": -1})


def test_config_load_missing_file(temp_dir: Path) -> None:
    """Test loading config when file doesn't exist."""
    config = Config.load(temp_dir / "nonexistent.toml")

    # Should return defaults
    assert config.pipeline.k == 100
    assert config.solver.alpha1 == 1.0


def test_config_load_from_toml(temp_dir: Path) -> None:
    """Test loading config from a TOML file."""
    config_path = temp_dir / "config.toml"
    # threads must be at root level, before any sections
    config_path.write_text("""
threads = 4

[solver]
lambda1 = 2.5

[pipeline]
cv = "fixed"
""")

    config = Config.load(config_path)

    assert config.threads == 4
    assert config.solver.lambda1 == 2.5
    assert config.pipeline.cv == "fixed"


def test_config_load_from_json(temp_dir: Path) -> None:
    config_path = temp_dir / "config.json"
    config_path.write_text(json.dumps({"scca": {"c_fraction": 0.25}}))
    assert Config.load(config_path).scca.c_fraction == 0.25


def test_config_load_unreadable(temp_dir: Path) -> None:
    config_path = temp_dir / "config.toml"
    config_path.write_text("[solver\n")
    with pytest.raises(ConfigError):
        Config.load(config_path)


def test_config_save_and_reload(temp_dir: Path) -> None:
    config = Config.from_dict({"solver": {"alpha2": 3.0}, "forest": {"seed": 9}})
    path = temp_dir / "saved.json"
    config.save(path)
    assert Config.load(path).to_dict() == config.to_dict()


def test_default_location_is_sandboxed() -> None:
    """Saving without a path writes into the patched config directory."""
    config = Config.load()
    config.save()
    assert (get_config_dir() / "config.json").exists()
    assert Config.load().to_dict() == config.to_dict()


def test_l1_bound() -> None:
    assert l1_bound(0.5, 100) == 5.0
    assert l1_bound(0.1, 4) == 1.0
    params = SccaConfig(c_fraction=0.5, d_fraction=1.0).params(16, 9)
    assert (params.c1, params.d1) == (2.0, 3.0)
    assert math.isclose(l1_bound(1.0, 2), math.sqrt(2))


def test_solver_config_deflation_default() -> None:
    assert SolverConfig().deflation == "projective"
