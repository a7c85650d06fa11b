"""Hotelling-style deflation of the cross-covariance between components."""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from cca_fuse.core.errors import ZeroMatrix, ZeroVector
from cca_fuse.core.matrix import FloatArray

# A residual this small relative to the input counts as identically zero
ZERO_RESIDUAL = 1e-12


class DeflationMode(Enum):
    """How the found rank-one direction is removed."""

    # Subtract ⟨Σxy, uvᵀ⟩/‖uvᵀ‖·uvᵀ, exactly as written in the K-GCCA algorithm
    LITERAL = "literal"
    # Subtract the orthogonal projection onto uvᵀ/‖uvᵀ‖_F
    PROJECTIVE = "projective"


class Deflation(NamedTuple):
    """Deflated, Frobenius-normalized cross-covariance and the residual norm before scaling."""

    sigma_xy: FloatArray
    residual_norm: float


def deflate_with_norm(
    sigma_xy: ArrayLike,
    u: ArrayLike,
    v: ArrayLike,
    mode: DeflationMode | str = DeflationMode.PROJECTIVE,
) -> Deflation:
    """Remove the uvᵀ component from Σxy and renormalize to unit Frobenius norm."""
    mode = DeflationMode(mode)
    matrix = np.asarray(sigma_xy, dtype=np.float64)
    rank_one = np.outer(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))
    rank_one_norm = float(np.linalg.norm(rank_one))
    if rank_one_norm == 0:
        raise ZeroVector("cannot deflate along a zero direction")

    inner = float(np.sum(matrix * rank_one))
    if mode is DeflationMode.PROJECTIVE:
        residual = matrix - (inner / rank_one_norm**2) * rank_one
    else:
        residual = matrix - (inner / rank_one_norm) * rank_one

    residual_norm = float(np.linalg.norm(residual))
    if residual_norm <= ZERO_RESIDUAL * float(np.linalg.norm(matrix)) or residual_norm == 0:
        raise ZeroMatrix("deflation left an identically zero cross-covariance")
    return Deflation(residual / residual_norm, residual_norm)


def deflate(
    sigma_xy: ArrayLike,
    u: ArrayLike,
    v: ArrayLike,
    mode: DeflationMode | str = DeflationMode.PROJECTIVE,
) -> FloatArray:
    """Deflated and renormalized Σxy."""
    return deflate_with_norm(sigma_xy, u, v, mode).sigma_xy
