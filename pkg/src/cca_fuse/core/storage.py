"""File formats: matrix and label CSVs, edge-list TSVs, model JSON and result CSVs.

All text is UTF-8 with LF line endings. Floats are written with repr() so
they read back bit-for-bit.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from cca_fuse.core.errors import CcaFuseError, MalformedFile, MissingLabels
from cca_fuse.core.graph import Edge, EdgeList
from cca_fuse.core.matrix import DataMatrix, frozen
from cca_fuse.core.metrics import EvalRecord
from cca_fuse.solvers.base import get_solver
from cca_fuse.solvers.deflation import DeflationMode
from cca_fuse.solvers.embedding import EmbeddingModel, FusedEmbedding

logger = logging.getLogger(__name__)


def _float(value: float) -> str:
    return repr(float(value))


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise MalformedFile(f"cannot read {path}: {e.strerror or e}") from e
    except UnicodeDecodeError as e:
        raise MalformedFile(f"{path} is not UTF-8") from e


def _write_rows(path: Path, rows: Iterable[Sequence[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerows(rows)


def read_matrix(path: Path) -> DataMatrix:
    """Read a sample-per-row CSV into a features×samples DataMatrix."""
    rows = list(csv.reader(_read_text(path).splitlines()))
    rows = [row for row in rows if row]
    if not rows:
        raise MalformedFile(f"{path} is empty")
    header = rows[0]
    if len(header) < 2 or header[0] != "sample_id":
        raise MalformedFile(f"{path}: header must start with 'sample_id' and name features")

    sample_ids: list[str] = []
    values: list[list[float]] = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedFile(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        try:
            values.append([float(cell) for cell in row[1:]])
        except ValueError as e:
            raise MalformedFile(f"{path}:{line}: {e}") from e
        sample_ids.append(row[0])
    if not values:
        raise MalformedFile(f"{path} has no samples")

    try:
        return DataMatrix(np.asarray(values).T, header[1:], sample_ids)
    except CcaFuseError as e:
        raise MalformedFile(f"{path}: {e}") from e


def write_matrix(path: Path, m: DataMatrix) -> None:
    rows: list[list[str]] = [["sample_id", *m.feature_names]]
    for j, sample in enumerate(m.sample_ids):
        rows.append([sample, *(_float(v) for v in m.values[:, j])])
    _write_rows(path, rows)


def read_labels(path: Path) -> dict[str, int]:
    """Read a sample_id,label CSV with labels in {0, 1}."""
    rows = [row for row in csv.reader(_read_text(path).splitlines()) if row]
    if not rows or [cell.strip() for cell in rows[0]] != ["sample_id", "label"]:
        raise MalformedFile(f"{path}: header must be 'sample_id,label'")
    labels: dict[str, int] = {}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != 2 or row[1].strip() not in ("0", "1"):
            raise MalformedFile(f"{path}:{line}: expected 'sample_id,0' or 'sample_id,1'")
        if row[0] in labels:
            raise MalformedFile(f"{path}:{line}: duplicate sample '{row[0]}'")
        labels[row[0]] = int(row[1])
    return labels


def write_labels(path: Path, sample_ids: Sequence[str], labels: ArrayLike) -> None:
    values = np.asarray(labels).reshape(-1)
    rows = [[s, str(int(v))] for s, v in zip(sample_ids, values, strict=True)]
    _write_rows(path, [["sample_id", "label"], *rows])


def labels_for(labels: Mapping[str, int], sample_ids: Sequence[str]) -> NDArray[np.int64]:
    """Labels in sample order; MissingLabels names the first unlabeled sample."""
    missing = [s for s in sample_ids if s not in labels]
    if missing:
        raise MissingLabels(f"{len(missing)} samples have no label, first '{missing[0]}'")
    return np.asarray([labels[s] for s in sample_ids], dtype=np.int64)


def read_edges(path: Path) -> EdgeList:
    """Read node_a<TAB>node_b<TAB>weight lines; '#' lines and blank lines are skipped."""
    edges: list[Edge] = []
    for line, text in enumerate(_read_text(path).splitlines(), start=1):
        if not text.strip() or text.startswith("#"):
            continue
        fields = text.split("\t")
        if len(fields) != 3:
            raise MalformedFile(f"{path}:{line}: expected 3 tab-separated fields")
        try:
            weight = float(fields[2])
        except ValueError as e:
            raise MalformedFile(f"{path}:{line}: bad weight '{fields[2]}'") from e
        edges.append(Edge(fields[0], fields[1], weight))
    return EdgeList(edges)


def write_edges(path: Path, edges: EdgeList) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{e.node_a}\t{e.node_b}\t{_float(e.weight)}\n" for e in edges.edges]
    path.write_text("".join(lines), encoding="utf-8")


def model_to_dict(model: EmbeddingModel) -> dict[str, Any]:
    return {
        "method": model.method,
        "k": model.k,
        "params": get_solver(model.method).params_to_dict(model.params),
        "feature_names_x": list(model.feature_names_x),
        "feature_names_y": list(model.feature_names_y),
        "per_component_rho": [float(r) for r in model.per_component_rho],
        "u_matrix": np.asarray(model.u_matrix).tolist(),
        "v_matrix": np.asarray(model.v_matrix).tolist(),
        "deflation_mode": model.deflation_mode.value,
        "iterations": list(model.iterations),
        "converged": list(model.converged),
        "residual_norms": [float(r) for r in model.residual_norms],
    }


def model_from_dict(data: Mapping[str, Any]) -> EmbeddingModel:
    try:
        solver = get_solver(data["method"])
        k = int(data["k"])
        names_x = tuple(data["feature_names_x"])
        names_y = tuple(data["feature_names_y"])
        u = np.asarray(data["u_matrix"], dtype=np.float64).reshape(len(names_x), k)
        v = np.asarray(data["v_matrix"], dtype=np.float64).reshape(len(names_y), k)
        return EmbeddingModel(
            u_matrix=frozen(u),
            v_matrix=frozen(v),
            per_component_rho=tuple(float(r) for r in data["per_component_rho"]),
            params=solver.params_from_dict(dict(data["params"])),
            method=solver.name,
            feature_names_x=names_x,
            feature_names_y=names_y,
            deflation_mode=DeflationMode(data.get("deflation_mode", "projective")),
            iterations=tuple(int(i) for i in data.get("iterations", ())),
            converged=tuple(bool(c) for c in data.get("converged", ())),
            residual_norms=tuple(float(r) for r in data.get("residual_norms", ())),
        )
    except (KeyError, TypeError, ValueError, CcaFuseError) as e:
        raise MalformedFile(f"invalid model document: {e}") from e


def save_model(path: Path, model: EmbeddingModel) -> None:
    write_json(path, model_to_dict(model))


def load_model(path: Path) -> EmbeddingModel:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise MalformedFile(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise MalformedFile(f"{path}: expected a JSON object")
    try:
        return model_from_dict(data)
    except MalformedFile as e:
        raise MalformedFile(f"{path}: {e}") from e


def write_json(path: Path, data: Mapping[str, Any]) -> None:
    """Deterministic JSON with non-finite floats rejected."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(data, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def write_records(path: Path, records: Iterable[EvalRecord]) -> int:
    """One EvalRecord per line; returns the number written."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [record.to_csv_line() + "\n" for record in records]
    path.write_text("".join(lines), encoding="utf-8")
    return len(lines)


def read_records(path: Path) -> list[EvalRecord]:
    records: list[EvalRecord] = []
    for line, text in enumerate(_read_text(path).splitlines(), start=1):
        if not text:
            continue
        parts = text.split(",", 2)
        if len(parts) != 3:
            raise MalformedFile(f"{path}:{line}: expected name,value,context")
        try:
            value = float(parts[1])
            context: dict[str, str] = {}
            for tag in filter(None, parts[2].split(";")):
                key, val = tag.split("=", 1)
                context[key] = val
        except ValueError as e:
            raise MalformedFile(f"{path}:{line}: {e}") from e
        if not math.isfinite(value):
            raise MalformedFile(f"{path}:{line}: non-finite value")
        records.append(EvalRecord(parts[0], value, context))
    return records


def write_embedding(path: Path, embedding: FusedEmbedding) -> None:
    """Z_e as a matrix CSV: one row per sample, columns x_e1..x_eK, y_e1..y_eK."""
    write_matrix(path, embedding.as_matrix())
