"""Independent-errors principal fitted components (the no-spatial baseline).

Plain column centering takes the place of the spatial whitening; both
spatial fitters collapse to this model when their association parameter is
switched off (identity correlation, zero lag coefficient).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec, FittedBasis, build_f
from .data import SpatialSample
from .rrr import (
    RrrEstimate,
    WhitenedData,
    apply_reduction,
    loglik,
    profiled_mean,
    rrr_mle,
)


def whiten_center(x: np.ndarray, f: np.ndarray) -> WhitenedData:
    """Ordinary column centering of predictors and features."""
    return WhitenedData(
        x_bar=x - x.mean(axis=0),
        f_bar=f - f.mean(axis=0),
        tag="identity-centering",
    )


@dataclass(frozen=True)
class IndFit:
    """Fitted independent-errors reduction."""

    est: RrrEstimate
    mu: np.ndarray
    loglik: float
    basis: FittedBasis = field(repr=False)
    kind: str = "ind"

    @property
    def spatial_param(self) -> None:
        return None

    def reduce(self, x_new: np.ndarray, use_ls: bool = False) -> np.ndarray:
        return apply_reduction(x_new, self.mu, self.est, use_ls=use_ls)


def fit_independent(sample: SpatialSample, spec: BasisSpec, rank: int) -> IndFit:
    """Rank-constrained PFC fit assuming independent errors."""
    bm = build_f(sample.y, spec)
    f_fit = bm.fit_matrix
    wd = whiten_center(sample.x, f_fit)
    est = rrr_mle(wd, rank)
    ll = loglik(wd, est, logdet_s_term=0.0)
    mu = profiled_mean(sample.x, f_fit, est, np.ones(sample.n))
    return IndFit(est=est, mu=mu, loglik=ll, basis=bm.fitted)
