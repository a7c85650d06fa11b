"""Feature graphs and their Laplacians.

A graph over one modality's features is either estimated from the data
(squared Pearson correlations as edge weights) or supplied as prior
knowledge in the form of a weighted edge list.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from cca_fuse.core.errors import (
    InvalidEdge,
    InvalidMatrix,
    InvalidParameters,
    NegativeWeight,
    ZeroVarianceFeature,
)
from cca_fuse.core.matrix import DataMatrix, FloatArray, frozen

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
ROW_SUM_TOL = 1e-10
PSD_TOL = 1e-8


class Edge(NamedTuple):
    """An undirected weighted edge between two named features."""

    node_a: str
    node_b: str
    weight: float


@dataclass(frozen=True)
class EdgeList:
    """Validated undirected edges: no self-loops, finite non-negative weights."""

    edges: tuple[Edge, ...] = ()

    def __init__(self, edges: Iterable[Edge | tuple[str, str, float]] = ()) -> None:
        checked: list[Edge] = []
        for raw in edges:
            edge = Edge(str(raw[0]), str(raw[1]), float(raw[2]))
            if edge.node_a == edge.node_b:
                raise InvalidEdge(f"self-loop on '{edge.node_a}'")
            if not math.isfinite(edge.weight):
                raise InvalidEdge(f"non-finite weight on ({edge.node_a}, {edge.node_b})")
            if edge.weight < 0:
                raise NegativeWeight(
                    f"negative weight {edge.weight} on ({edge.node_a}, {edge.node_b})"
                )
            checked.append(edge)
        object.__setattr__(self, "edges", tuple(checked))

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class GraphLaplacian:
    """L = D − W over named nodes.

    Construction only checks shapes; use validate_laplacian to check the
    Laplacian properties themselves.
    """

    matrix: FloatArray = field(repr=False)
    node_names: tuple[str, ...]

    def __init__(self, matrix: ArrayLike, node_names: Sequence[str]) -> None:
        array = frozen(matrix)
        m = len(node_names)
        if array.shape != (m, m):
            raise InvalidMatrix(f"Laplacian of shape {array.shape} for {m} node names")
        object.__setattr__(self, "matrix", array)
        object.__setattr__(self, "node_names", tuple(node_names))

    @property
    def size(self) -> int:
        return len(self.node_names)

    def quadratic_form(self, u: ArrayLike) -> float:
        """uᵀ·L·u."""
        vec = np.asarray(u, dtype=np.float64)
        return float(vec @ self.matrix @ vec)


def _laplacian(weights: FloatArray) -> FloatArray:
    return np.diag(weights.sum(axis=1)) - weights


def laplacian_from_data(m: DataMatrix, cutoff: float = 0.0) -> GraphLaplacian:
    """Dense graph with squared Pearson correlation between features as weights.

    Weights below cutoff are zeroed; the default keeps every pair.
    """
    if cutoff < 0:
        raise InvalidParameters(f"cutoff must be non-negative, got {cutoff}")
    m.require_samples(2)
    constant = np.ptp(m.values, axis=1) == 0
    if np.any(constant):
        raise ZeroVarianceFeature(m.feature_names[int(np.argmax(constant))])

    if m.n_features == 1:
        return GraphLaplacian(np.zeros((1, 1)), m.feature_names)

    corr = np.corrcoef(m.values)
    weights = corr**2
    weights = (weights + weights.T) / 2
    np.fill_diagonal(weights, 0.0)
    if cutoff > 0:
        weights[weights < cutoff] = 0.0
    return GraphLaplacian(_laplacian(weights), m.feature_names)


class EdgeGraph(NamedTuple):
    """A Laplacian built from an edge list, with the count of dropped edges."""

    laplacian: GraphLaplacian
    skipped_edges: int


def laplacian_from_edges(
    edges: EdgeList | Iterable[Edge | tuple[str, str, float]],
    feature_names: Sequence[str],
) -> EdgeGraph:
    """Prior-knowledge Laplacian over feature_names.

    Edges with an endpoint outside feature_names are skipped and counted.
    Repeated pairs have their weights summed.
    """
    edge_list = edges if isinstance(edges, EdgeList) else EdgeList(edges)
    if len(set(feature_names)) != len(feature_names):
        raise InvalidMatrix("feature names are not unique")

    index = {name: i for i, name in enumerate(feature_names)}
    weights = np.zeros((len(feature_names), len(feature_names)))
    skipped = 0
    for edge in edge_list.edges:
        a = index.get(edge.node_a)
        b = index.get(edge.node_b)
        if a is None or b is None:
            skipped += 1
            continue
        weights[a, b] += edge.weight
        weights[b, a] += edge.weight

    if skipped:
        logger.info("Skipped %d of %d edges with unknown endpoints", skipped, len(edge_list))
    return EdgeGraph(GraphLaplacian(_laplacian(weights), feature_names), skipped)


def complete_graph_laplacian(node_names: Sequence[str]) -> GraphLaplacian:
    """Laplacian of the complete graph with unit weights: m·I − 1·1ᵀ."""
    m = len(node_names)
    weights = np.ones((m, m)) - np.eye(m)
    return GraphLaplacian(_laplacian(weights), node_names)


def laplacian_to_edges(laplacian: GraphLaplacian) -> EdgeList:
    """Upper-triangle edges with weight −L_ij for every nonzero off-diagonal entry."""
    matrix = laplacian.matrix
    names = laplacian.node_names
    rows, cols = np.nonzero(np.triu(-matrix, k=1) > 0)
    return EdgeList(
        Edge(names[i], names[j], float(-matrix[i, j]))
        for i, j in zip(rows.tolist(), cols.tolist(), strict=True)
    )


@dataclass(frozen=True)
class LaplacianCheck:
    """One Laplacian property with its measured quantity."""

    name: str
    passed: bool
    measured: float
    tolerance: float
    description: str


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of every Laplacian check."""

    checks: tuple[LaplacianCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, name: str) -> LaplacianCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def format(self) -> str:
        lines = []
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            lines.append(
                f"{status}  {check.name:<14} {check.measured: .3e}  "
                f"(tolerance {check.tolerance:.1e}; {check.description})"
            )
        return "\n".join(lines)


def validate_laplacian(laplacian: GraphLaplacian) -> ValidationReport:
    """Check symmetry, zero row sums, non-positive off-diagonals and PSD-ness.

    Failures are reported, never raised.
    """
    matrix = laplacian.matrix
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0

    asymmetry = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    relative_asymmetry = asymmetry / scale if scale > 0 else 0.0

    row_sum_deviation = float(np.max(np.abs(matrix.sum(axis=1)))) if matrix.size else 0.0

    off_diagonal = matrix - np.diag(np.diag(matrix))
    max_off_diagonal = float(np.max(off_diagonal)) if matrix.shape[0] > 1 else 0.0

    if matrix.size:
        eigenvalues = scipy.linalg.eigvalsh((matrix + matrix.T) / 2)
        min_eig = float(eigenvalues[0])
        max_eig = float(eigenvalues[-1])
    else:
        min_eig = max_eig = 0.0
    psd_floor = -PSD_TOL * max(max_eig, 0.0)

    checks = (
        LaplacianCheck(
            "symmetry",
            relative_asymmetry <= SYMMETRY_TOL,
            relative_asymmetry,
            SYMMETRY_TOL,
            "max |L - Lᵀ| relative to max |L|",
        ),
        LaplacianCheck(
            "row_sum",
            row_sum_deviation <= ROW_SUM_TOL,
            row_sum_deviation,
            ROW_SUM_TOL,
            "max |row sum|",
        ),
        LaplacianCheck(
            "off_diagonal",
            max_off_diagonal <= 0.0,
            max_off_diagonal,
            0.0,
            "largest off-diagonal entry",
        ),
        LaplacianCheck(
            "psd",
            min_eig >= psd_floor,
            min_eig,
            PSD_TOL,
            "smallest eigenvalue, relative to the largest",
        ),
    )
    return ValidationReport(checks)
