"""Planar coordinates, distances, and the two spatial association structures.

Geostatistical association uses an exponential correlation matrix
``exp(-decay * distance)``; lattice association uses a column-normalized
distance-threshold neighbor matrix ``W`` together with the autoregressive
filter ``I - coef * W``.  All operations are pure functions of their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._linalg import pd_eigh
from .exceptions import (
    DuplicatePointsError,
    InputError,
    IsolatedPointError,
    NearSingularCorrelationError,
    NonPositiveDecayError,
    SingularFilterError,
)

COLUMN_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Coordinates:
    """n x 2 matrix of planar sample locations."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"coordinates must be n x 2, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise InputError("need at least two locations")
        if not np.all(np.isfinite(pts)):
            raise InputError("coordinates must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric Euclidean distance matrix with an exactly-zero diagonal."""

    dist: np.ndarray

    @property
    def n(self) -> int:
        return self.dist.shape[0]


@dataclass(frozen=True)
class ExpCorrelation:
    """Exponential correlation matrix ``exp(-decay * distance)``.

    ``eigvals``/``eigvecs`` hold the symmetric eigendecomposition of the
    (possibly jittered) matrix so downstream whitening does not repeat it.
    """

    decay: float
    matrix: np.ndarray
    eigvals: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)

    @property
    def logdet(self) -> float:
        return float(np.sum(np.log(self.eigvals)))


@dataclass(frozen=True)
class NeighborWeights:
    """Column-normalized adjacency from a distance threshold."""

    matrix: np.ndarray
    threshold: float


@dataclass(frozen=True)
class SpatialFilter:
    """Autoregressive filter ``I - coef * W`` with its log|det| cached."""

    coef: float
    matrix: np.ndarray
    log_abs_det: float


def pairwise_distances(coords: Coordinates) -> DistanceMatrix:
    """Euclidean distances between all location pairs.

    Raises ``DuplicatePointsError`` when two locations coincide.
    """
    dist = squareform(pdist(coords.points))
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    if masked.min() <= 0.0:
        i, j = divmod(int(np.argmin(masked)), coords.n)
        raise DuplicatePointsError(f"locations {i} and {j} coincide")
    return DistanceMatrix(dist)


def exp_correlation(dist: DistanceMatrix, decay: float) -> ExpCorrelation:
    """Exponential correlogram ``exp(-decay * d_ij)`` as a dense matrix.

    Positive definiteness is enforced with the shared jitter policy; the
    stored eigendecomposition refers to the matrix actually returned.
    """
    if not decay > 0.0:
        raise NonPositiveDecayError(f"decay rate must be > 0, got {decay}")
    h = np.exp(-decay * dist.dist)
    vals, vecs, used = pd_eigh(h, NearSingularCorrelationError)
    return ExpCorrelation(decay=float(decay), matrix=used, eigvals=vals, eigvecs=vecs)


def max_min_distance(dist: DistanceMatrix) -> float:
    """Largest nearest-neighbor distance: the smallest threshold at which
    every location still has at least one neighbor."""
    d = dist.dist + np.diag(np.full(dist.n, np.inf))
    return float(d.min(axis=1).max())


def neighbor_weights(dist: DistanceMatrix, threshold: float) -> NeighborWeights:
    """Binary adjacency at ``distance <= threshold`` (ties included), zero
    diagonal, each column normalized to sum to one.

    Raises ``IsolatedPointError`` when some location has no neighbor.
    """
    adj = (dist.dist <= threshold).astype(float)
    np.fill_diagonal(adj, 0.0)
    col_sums = adj.sum(axis=0)
    if np.any(col_sums == 0.0):
        lone = int(np.argmax(col_sums == 0.0))
        raise IsolatedPointError(
            f"location {lone} has no neighbor within threshold {threshold}"
        )
    return NeighborWeights(matrix=adj / col_sums, threshold=float(threshold))


def spatial_filter(weights: NeighborWeights, coef: float) -> SpatialFilter:
    """Build ``I - coef * W`` and verify invertibility.

    For a column-normalized ``W`` the spectral radius is at most one, so any
    ``|coef| < 1`` is safe; the determinant check catches the rest.
    """
    n = weights.matrix.shape[0]
    wt = np.eye(n) - coef * weights.matrix
    sign, log_abs_det = np.linalg.slogdet(wt)
    if sign == 0.0 or not np.isfinite(log_abs_det):
        raise SingularFilterError(f"I - {coef} * W is singular")
    cond = np.linalg.cond(wt, 1)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularFilterError(
            f"I - {coef} * W is numerically singular (cond ~ {cond:.2e})"
        )
    return SpatialFilter(coef=float(coef), matrix=wt, log_abs_det=float(log_abs_det))
