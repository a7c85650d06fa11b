"""Tests for file formats."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from cca_fuse.core.errors import MalformedFile, MissingLabels, NegativeWeight
from cca_fuse.core.graph import EdgeList, laplacian_from_data
from cca_fuse.core.matrix import DataMatrix
from cca_fuse.core.metrics import EvalRecord
from cca_fuse.core.storage import (
    labels_for,
    load_model,
    read_edges,
    read_labels,
    read_matrix,
    read_records,
    save_model,
    write_edges,
    write_embedding,
    write_labels,
    write_matrix,
    write_records,
)
from cca_fuse.solvers.embedding import fit_kgcca, transform
from cca_fuse.solvers.gcca import GccaParams

from .conftest import PairFactory


def test_matrix_round_trip(temp_dir: Path, rng: np.random.Generator) -> None:
    """Values survive a write/read cycle bit-for-bit."""
    m = DataMatrix(rng.standard_normal((3, 4)) / 3.0, ["g1", "g2", "g3"], ["a", "b", "c", "d"])
    path = temp_dir / "nested" / "x.csv"
    write_matrix(path, m)
    loaded = read_matrix(path)
    np.testing.assert_array_equal(loaded.values, m.values)
    assert loaded.feature_names == m.feature_names
    assert loaded.sample_ids == m.sample_ids
    assert path.read_text(encoding="utf-8").splitlines()[0] == "sample_id,g1,g2,g3"


def test_read_matrix_layout(temp_dir: Path) -> None:
    path = temp_dir / "x.csv"
    path.write_text("sample_id,f1,f2\ns1,1.0,2.0\ns2,3.0,4.0\ns3,5.0,6.5\n", encoding="utf-8")
    m = read_matrix(path)
    np.testing.assert_array_equal(m.values, [[1.0, 3.0, 5.0], [2.0, 4.0, 6.5]])


@pytest.mark.parametrize(
    "content",
    [
        "",
        "id,f1\ns1,1.0\n",
        "sample_id,f1\ns1,1.0,2.0\n",
        "sample_id,f1\ns1,abc\n",
        "sample_id,f1\n",
        "sample_id,f1\ns1,nan\n",
        "sample_id,f1\ns1,1.0\ns1,2.0\n",
    ],
)
def test_read_matrix_rejects_malformed(temp_dir: Path, content: str) -> None:
    path = temp_dir / "bad.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(MalformedFile):
        read_matrix(path)


def test_missing_file_is_malformed(temp_dir: Path) -> None:
    with pytest.raises(MalformedFile, match="cannot read"):
        read_matrix(temp_dir / "absent.csv")


def test_labels(temp_dir: Path) -> None:
    path = temp_dir / "labels.csv"
    write_labels(path, ["s1", "s2", "s3"], [1, 0, 1])
    labels = read_labels(path)
    assert labels == {"s1": 1, "s2": 0, "s3": 1}
    np.testing.assert_array_equal(labels_for(labels, ["s3", "s2"]), [1, 0])
    with pytest.raises(MissingLabels, match="s9"):
        labels_for(labels, ["s1", "s9"])


def test_labels_reject_bad_values(temp_dir: Path) -> None:
    path = temp_dir / "labels.csv"
    path.write_text("sample_id,label\ns1,2\n", encoding="utf-8")
    with pytest.raises(MalformedFile):
        read_labels(path)
    path.write_text("sample_id,label\ns1,0\ns1,1\n", encoding="utf-8")
    with pytest.raises(MalformedFile, match="duplicate"):
        read_labels(path)


def test_edges_with_comments(temp_dir: Path) -> None:
    path = temp_dir / "graph.tsv"
    path.write_text("# prior network\n\ng1\tg2\t1.5\ng2\tg3\t0.25\n", encoding="utf-8")
    edges = read_edges(path)
    assert len(edges) == 2
    assert edges.edges[0].weight == 1.5

    copy = temp_dir / "copy.tsv"
    write_edges(copy, edges)
    assert read_edges(copy) == edges


def test_edges_reject_bad_lines(temp_dir: Path) -> None:
    path = temp_dir / "graph.tsv"
    path.write_text("g1 g2 1.0\n", encoding="utf-8")
    with pytest.raises(MalformedFile):
        read_edges(path)
    path.write_text("g1\tg2\theavy\n", encoding="utf-8")
    with pytest.raises(MalformedFile):
        read_edges(path)
    path.write_text("g1\tg2\t-1\n", encoding="utf-8")
    with pytest.raises(NegativeWeight):
        read_edges(path)

    empty = temp_dir / "empty.tsv"
    empty.write_text("# no edges\n", encoding="utf-8")
    assert read_edges(empty) == EdgeList()


def test_model_round_trip(temp_dir: Path, latent_pair: PairFactory) -> None:
    x, y = latent_pair(0)
    model = fit_kgcca(x, y, laplacian_from_data(x), laplacian_from_data(y), 2, GccaParams())
    path = temp_dir / "model.json"
    save_model(path, model)
    loaded = load_model(path)

    np.testing.assert_array_equal(loaded.u_matrix, model.u_matrix)
    np.testing.assert_array_equal(loaded.v_matrix, model.v_matrix)
    assert loaded.params == model.params
    assert loaded.per_component_rho == model.per_component_rho
    assert loaded.feature_names_y == model.feature_names_y
    assert loaded.residual_norms == model.residual_norms


def test_model_rejects_bad_documents(temp_dir: Path) -> None:
    path = temp_dir / "model.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(MalformedFile):
        load_model(path)
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(MalformedFile):
        load_model(path)
    path.write_text(json.dumps({"method": "kgcca", "k": 1}), encoding="utf-8")
    with pytest.raises(MalformedFile):
        load_model(path)


def test_records_round_trip(temp_dir: Path) -> None:
    records = [
        EvalRecord("rho_error", 0.125, {"method": "1-GCCA", "setting": "l=5 sigma=0.5"}),
        EvalRecord("f1", 1 / 3, {}),
    ]
    path = temp_dir / "out" / "bench.csv"
    assert write_records(path, records) == 2
    assert read_records(path) == records


def test_embedding_file(temp_dir: Path, latent_pair: PairFactory) -> None:
    x, y = latent_pair(1)
    model = fit_kgcca(x, y, laplacian_from_data(x), laplacian_from_data(y), 2, GccaParams())
    path = temp_dir / "z.csv"
    write_embedding(path, transform(model, x, y))
    loaded = read_matrix(path)
    assert loaded.feature_names == ("x_e1", "x_e2", "y_e1", "y_e2")
    assert loaded.n_samples == x.n_samples
