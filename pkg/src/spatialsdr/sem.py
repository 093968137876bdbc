"""Autoregressive-error model: neighbor-lagged errors on a lattice.

Errors follow ``E = coef * W E + U`` with independent rows of ``U``, so
left-multiplying by the filter ``Wt = I - coef * W`` whitens the rows.
Because a column-normalized ``W`` is generally asymmetric, the quadratic
form is defined through ``Wt' Wt`` (a true Gaussian log-density either
way), which matches the symmetric-``W`` algebra exactly.  Profiling out
the mean uses the generalized centering

    Wc = I - 1 (1' Wt'Wt 1)^{-1} 1' Wt'Wt,
    x_bar = Wt Wc X,   f_bar = Wt Wc F,

and the likelihood carries ``+ p log|det Wt|``.  The lag coefficient is
profiled over a grid on (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, FittedBasis, build_f
from .data import SpatialSample
from .exceptions import EmptyGridError, InputError
from .geometry import (
    NeighborWeights,
    SpatialFilter,
    max_min_distance,
    neighbor_weights,
    pairwise_distances,
    spatial_filter,
)
from .rrr import (
    RrrEstimate,
    WhitenedData,
    apply_reduction,
    loglik,
    profiled_mean,
    rrr_mle,
)

DEFAULT_GRID = np.round(np.arange(-0.95, 0.951, 0.05), 2)


def default_lag_grid() -> np.ndarray:
    """-0.95 .. 0.95 in steps of 0.05 (39 points)."""
    return DEFAULT_GRID.copy()


def whiten_sem(x: np.ndarray, f: np.ndarray, filt: SpatialFilter) -> WhitenedData:
    """Generalized centering under ``Wt'Wt`` weights, then the filter map."""
    wt = filt.matrix
    ones = np.ones(x.shape[0])
    wt_1 = wt @ ones
    m_1 = wt.T @ wt_1  # (Wt'Wt) 1
    denom = float(wt_1 @ wt_1)

    def transform(mat: np.ndarray) -> np.ndarray:
        centered = mat - np.outer(ones, m_1 @ mat) / denom
        return wt @ centered

    return WhitenedData(
        x_bar=transform(x), f_bar=transform(f), tag=f"sem(coef={filt.coef:g})"
    )


@dataclass(frozen=True)
class SemFit:
    """Fitted autoregressive-error reduction.

    ``lag_coef`` is the profiled coefficient; ``grid`` records every
    evaluated (coef, loglik) pair in ascending coefficient order.
    """

    lag_coef: float
    est: RrrEstimate
    mu: np.ndarray
    loglik: float
    grid: list[tuple[float, float]] = field(repr=False)
    weights: NeighborWeights = field(repr=False)
    basis: FittedBasis = field(repr=False)
    kind: str = "sem"

    @property
    def spatial_param(self) -> float:
        return self.lag_coef

    def reduce(self, x_new: np.ndarray, use_ls: bool = False) -> np.ndarray:
        return apply_reduction(x_new, self.mu, self.est, use_ls=use_ls)


def fit_sem(
    sample: SpatialSample,
    spec: BasisSpec,
    rank: int,
    lag_grid: np.ndarray | None = None,
    weights: NeighborWeights | None = None,
) -> SemFit:
    """Profile the lag coefficient over a grid and keep the argmax fit.

    The neighbor matrix defaults to the distance-threshold construction at
    the largest nearest-neighbor distance.  Ties in the profile likelihood
    break toward the coefficient of smallest magnitude (the model closest
    to independence).
    """
    bm = build_f(sample.y, spec)
    f_fit = bm.fit_matrix
    p = sample.p

    if weights is None:
        dist = pairwise_distances(sample.coords)
        weights = neighbor_weights(dist, max_min_distance(dist))

    if lag_grid is None:
        lag_grid = default_lag_grid()
    lag_grid = np.asarray(lag_grid, dtype=float)
    if lag_grid.size == 0:
        raise EmptyGridError("lag-coefficient grid is empty")
    if np.any(np.abs(lag_grid) >= 1.0):
        raise InputError("lag-coefficient grid entries must lie in (-1, 1)")

    results: dict[float, tuple[float, RrrEstimate, SpatialFilter]] = {}
    best = None
    # Scan smallest |coef| first so ties keep the near-independent model.
    for coef in sorted(lag_grid, key=lambda c: (abs(c), c)):
        filt = spatial_filter(weights, coef)
        wd = whiten_sem(sample.x, f_fit, filt)
        est = rrr_mle(wd, rank)
        ll = loglik(wd, est, logdet_s_term=-p * filt.log_abs_det)
        results[float(coef)] = (ll, est, filt)
        if best is None or ll > best[1]:
            best = (float(coef), ll, est, filt)

    coef_hat, ll_hat, est, filt = best
    wt_1 = filt.matrix @ np.ones(sample.n)
    mu = profiled_mean(sample.x, f_fit, est, filt.matrix.T @ wt_1)
    grid = [(c, results[c][0]) for c in sorted(results)]
    return SemFit(
        lag_coef=coef_hat,
        est=est,
        mu=mu,
        loglik=ll_hat,
        grid=grid,
        weights=weights,
        basis=bm.fitted,
    )
