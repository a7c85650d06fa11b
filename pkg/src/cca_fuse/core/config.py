"""Configuration management for cca-fuse."""

from __future__ import annotations

import json
import math
import tomllib
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any

from cca_fuse.core.errors import CcaFuseError, ConfigError
from cca_fuse.core.forest import ForestConfig
from cca_fuse.solvers.deflation import DeflationMode
from cca_fuse.solvers.gcca import GccaParams
from cca_fuse.solvers.scca import SccaParams

DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0)
DEFAULT_BOUND_FRACTIONS = (0.25, 0.5, 0.75, 1.0)


def get_config_dir() -> Path:
    """Get the configuration directory, respecting XDG."""
    xdg_config = Path.home() / ".config"
    return xdg_config / "cca-fuse"


@dataclass
class SolverConfig:
    """Default Θ and controls for 1-GCCA."""

    alpha1: float = 1.0
    beta1: float = 0.1
    lambda1: float = 0.1
    alpha2: float = 1.0
    beta2: float = 0.1
    lambda2: float = 0.1
    epsilon_reweight: float = 1e-6
    tol: float = 1e-6
    max_iter: int = 500
    deflation: str = DeflationMode.PROJECTIVE.value

    def params(self) -> GccaParams:
        return GccaParams(
            self.alpha1,
            self.beta1,
            self.lambda1,
            self.alpha2,
            self.beta2,
            self.lambda2,
            epsilon_reweight=self.epsilon_reweight,
            tol=self.tol,
            max_iter=self.max_iter,
        )


def l1_bound(fraction: float, dim: int) -> float:
    """fraction·√dim, never below 1 (the tightest bound a unit vector can meet)."""
    return max(1.0, fraction * math.sqrt(dim))


@dataclass
class SccaConfig:
    """ℓ1 bounds for SCCA as fractions of √p and √q."""

    c_fraction: float = 0.5
    d_fraction: float = 0.5
    tol: float = 1e-6
    max_iter: int = 500

    def params(self, p: int, q: int) -> SccaParams:
        return SccaParams(
            c1=l1_bound(self.c_fraction, p),
            d1=l1_bound(self.d_fraction, q),
            tol=self.tol,
            max_iter=self.max_iter,
        )


@dataclass
class GridConfig:
    """Hyperparameter candidates searched on the validation set."""

    alpha: list[float] = field(default_factory=lambda: list(DEFAULT_GRID))
    beta: list[float] = field(default_factory=lambda: list(DEFAULT_GRID))
    lambda_: list[float] = field(default_factory=lambda: list(DEFAULT_GRID))
    full: bool = False  # True searches α, β, λ independently per modality
    bound_fractions: list[float] = field(default_factory=lambda: list(DEFAULT_BOUND_FRACTIONS))
    selection_metric: str = "validation_rho"


@dataclass
class PipelineConfig:
    """Fit-embed-classify settings."""

    k: int = 100
    method: str = "kgcca"
    preprocess_x: str = "center"
    preprocess_y: str = "center"
    cv: str = "kfold"  # "kfold" or "fixed"
    folds: int = 5
    fractions: list[float] = field(default_factory=lambda: [0.5, 0.1, 0.4])
    tune: bool = False
    baselines: list[str] = field(default_factory=list)
    graph_cutoff: float = 0.0
    permutations: int = 0
    seed: int = 0


@dataclass
class Config:
    """Main configuration for cca-fuse."""

    solver: SolverConfig = field(default_factory=SolverConfig)
    scca: SccaConfig = field(default_factory=SccaConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    threads: int = 0  # 0 means CCA_FUSE_THREADS or all cores
    _source_path: Path | None = field(default=None, repr=False)

    @classmethod
    def load(cls, path: Path | None = None) -> Config:
        """Load configuration from a JSON or TOML file, falling back to defaults."""
        if path is None:
            config_dir = get_config_dir()
            path = config_dir / "config.toml"
            if not path.exists():
                path = config_dir / "config.json"

        if not path.exists():
            config = cls()
            config._source_path = path
            return config

        try:
            if path.suffix == ".json":
                data = json.loads(path.read_text(encoding="utf-8"))
            else:
                with path.open("rb") as f:
                    data = tomllib.load(f)
        except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object or TOML table")

        config = cls.from_dict(data)
        config._source_path = path
        return config

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Config:
        """Create Config from a dictionary; unknown keys are rejected."""
        _reject_unknown(data, {"solver", "scca", "grid", "forest", "pipeline", "threads"}, "")
        threads = data.get("threads", 0)
        if not isinstance(threads, int) or threads < 0:
            raise ConfigError(f"threads must be a non-negative integer, got {threads!r}")
        return cls(
            solver=_section(SolverConfig, data, "solver"),
            scca=_section(SccaConfig, data, "scca"),
            grid=_section(GridConfig, data, "grid"),
            forest=_section(ForestConfig, data, "forest"),
            pipeline=_section(PipelineConfig, data, "pipeline"),
            threads=threads,
        )

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for name in ("solver", "scca", "grid", "forest", "pipeline"):
            section = asdict(getattr(self, name))
            data[name] = {
                key: value.value if isinstance(value, Enum) else value
                for key, value in section.items()
            }
        data["threads"] = self.threads
        return data

    def save(self, path: Path | None = None) -> None:
        """Save configuration as JSON."""
        if path is None:
            path = self._source_path
            if path is None or path.suffix != ".json":
                path = get_config_dir() / "config.json"

        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _reject_unknown(data: dict[str, Any], known: set[str], section: str) -> None:
    unknown = sorted(set(data) - known)
    if unknown:
        where = f" in [{section}]" if section else ""
        raise ConfigError(f"unknown config key{where}: {', '.join(unknown)}")


def _section(cls: type[Any], data: dict[str, Any], name: str) -> Any:
    values = data.get(name, {})
    if not isinstance(values, dict):
        raise ConfigError(f"[{name}] must be a table")
    _reject_unknown(values, {f.name for f in fields(cls)}, name)
    try:
        return cls(**values)
    except (TypeError, ValueError, CcaFuseError) as e:
        raise ConfigError(f"invalid [{name}] section: {e}") from e
