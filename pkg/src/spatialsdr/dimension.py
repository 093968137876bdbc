"""Choosing the reduction dimension: LR sequence, AIC/BIC, CV prediction error.

The likelihood-based criteria consume only the maximized log-likelihoods
for ranks 0..min(p, r) and are therefore independent of the prediction
rule; cross-validated minimum prediction error depends on it by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .basis import BasisSpec
from .data import SpatialSample
from .exceptions import CvFailedError, InputError, NonMonotoneLogliksError, SpatialSdrError

MONOTONE_SLACK = 1e-8


@dataclass(frozen=True)
class DimSelection:
    """Outcome of a dimension-selection procedure.

    ``trace`` holds one record per candidate rank with the quantities the
    criterion looked at (log-likelihood and statistic/p-value or criterion
    value, or CV error).
    """

    criterion: str
    d_star: int
    trace: list[dict] = field(repr=False)
    alpha: float | None = None


def param_count(p: int, delta: int, r: int) -> int:
    """Free-parameter count at rank ``delta``: mean and covariance
    (p(p+3)/2) plus rank-delta coefficient factors."""
    return p * (p + 3) // 2 + r * delta + delta * (p - delta)


def chi2_sf(x: float, dof: int) -> float:
    """Upper-tail chi-square probability via the regularized upper
    incomplete gamma function."""
    if dof == 0:
        return 1.0 if x <= 0.0 else 0.0
    return float(gammaincc(dof / 2.0, x / 2.0))


def _check_logliks(logliks: np.ndarray, p: int, r: int) -> np.ndarray:
    logliks = np.asarray(logliks, dtype=float)
    m = min(p, r)
    if logliks.shape != (m + 1,):
        raise InputError(f"need {m + 1} log-likelihoods for ranks 0..{m}")
    scale = max(1.0, float(np.abs(logliks).max()))
    if np.any(np.diff(logliks) < -MONOTONE_SLACK * scale):
        raise NonMonotoneLogliksError(
            "log-likelihoods decrease with rank; upstream fit is inconsistent"
        )
    return logliks


def select_lr(
    logliks: np.ndarray, p: int, r: int, n: int, alpha: float = 0.05
) -> DimSelection:
    """Sequential likelihood-ratio tests from rank 0 upward.

    At each candidate rank the statistic ``2 * (L_max - L_delta)`` is
    referred to a chi-square with ``(r - delta) * (p - delta)`` degrees of
    freedom; the first non-rejected rank is selected, or min(p, r) when
    every test rejects.
    """
    logliks = _check_logliks(logliks, p, r)
    m = min(p, r)
    trace = []
    d_star = m
    chosen = False
    for delta in range(m + 1):
        stat = max(0.0, 2.0 * (logliks[m] - logliks[delta]))
        dof = (r - delta) * (p - delta)
        pval = chi2_sf(stat, dof)
        trace.append(
            {"rank": delta, "loglik": float(logliks[delta]),
             "statistic": stat, "dof": dof, "p_value": pval}
        )
        if not chosen and pval >= alpha:
            d_star = delta
            chosen = True
    return DimSelection(criterion="lr", d_star=d_star, trace=trace, alpha=alpha)


def select_ic(
    logliks: np.ndarray, p: int, r: int, n: int, kind: str = "aic"
) -> DimSelection:
    """Information-criterion choice: ``-2 L_delta + penalty * params``."""
    if kind not in ("aic", "bic"):
        raise InputError(f"unknown criterion {kind!r}")
    logliks = _check_logliks(logliks, p, r)
    m = min(p, r)
    weight = 2.0 if kind == "aic" else float(np.log(n))
    values = [
        -2.0 * logliks[delta] + weight * param_count(p, delta, r)
        for delta in range(m + 1)
    ]
    trace = [
        {"rank": delta, "loglik": float(logliks[delta]), "criterion": values[delta]}
        for delta in range(m + 1)
    ]
    d_star = int(np.argmin(values))  # argmin takes the smallest rank on ties
    return DimSelection(criterion=kind, d_star=d_star, trace=trace)


def fit_rank_profile(
    sample: SpatialSample,
    kind: str,
    spec: BasisSpec,
    decay_grid: np.ndarray | None = None,
    lag_grid: np.ndarray | None = None,
):
    """Fit every rank 0..min(p, r), re-profiling the spatial parameter each
    time.  Returns the list of fits (index = rank)."""
    from .pfc import fit_independent
    from .sem import fit_sem
    from .sscm import fit_sscm

    m = min(sample.p, spec.degree)
    fits = []
    for delta in range(m + 1):
        if kind == "ind":
            fits.append(fit_independent(sample, spec, delta))
        elif kind == "sscm":
            fits.append(fit_sscm(sample, spec, delta, decay_grid=decay_grid))
        elif kind == "sem":
            fits.append(fit_sem(sample, spec, delta, lag_grid=lag_grid))
        else:
            raise InputError(f"unknown model kind {kind!r}")
    return fits


def loglik_profile(
    sample: SpatialSample,
    kind: str,
    spec: BasisSpec,
    decay_grid: np.ndarray | None = None,
    lag_grid: np.ndarray | None = None,
) -> np.ndarray:
    """Maximized log-likelihood for each rank 0..min(p, r)."""
    fits = fit_rank_profile(
        sample, kind, spec, decay_grid=decay_grid, lag_grid=lag_grid
    )
    return np.array([f.loglik for f in fits])


def select_cv(
    sample: SpatialSample,
    kind: str,
    spec: BasisSpec,
    kernels: str = "2k",
    folds: int = 5,
    d_range: tuple[int, ...] | None = None,
    seed: int = 0,
    loo: bool = False,
    decay_grid: np.ndarray | None = None,
    lag_grid: np.ndarray | None = None,
) -> DimSelection:
    """Rank by minimum K-fold cross-validated prediction error.

    Folds come from a seeded shuffle without spatial stratification; pass
    ``loo=True`` for leave-one-out.  A fold failure invalidates that rank;
    if every candidate fails, ``CvFailedError`` is raised.  Ties break to
    the smallest rank.
    """
    from .predictor import (
        PredictorConfig,
        build_reference,
        loocv_bandwidths,
        predict_many,
    )
    from .pfc import fit_independent
    from .sem import fit_sem
    from .sscm import fit_sscm

    if kernels not in ("1k", "2k"):
        raise InputError("kernels must be '1k' or '2k'")
    m = min(sample.p, spec.degree)
    if d_range is None:
        d_range = tuple(range(1, m + 1))
    if any(d < 1 or d > m for d in d_range):
        raise InputError(f"d_range must be within 1..{m}")
    n_folds = sample.n if loo else folds
    if n_folds < 2 or n_folds > sample.n:
        raise InputError("folds must be between 2 and n")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(sample.n)
    fold_ids = np.array_split(perm, n_folds)
    mode = {
        "ind": f"{kernels}.Ind",
        "sscm": f"{kernels}.SSCM",
        "sem": f"{kernels}.SEM",
    }[kind]

    trace = []
    errors: dict[int, float] = {}
    for d in sorted(d_range):
        sq_errors = []
        try:
            for held in fold_ids:
                train_idx = np.setdiff1d(perm, held, assume_unique=True)
                train, test = sample.subset(train_idx), sample.subset(held)
                if kind == "ind":
                    fit = fit_independent(train, spec, d)
                elif kind == "sscm":
                    fit = fit_sscm(train, spec, d, decay_grid=decay_grid)
                else:
                    fit = fit_sem(train, spec, d, lag_grid=lag_grid)
                ref = build_reference(mode, train, fit)
                config = PredictorConfig(mode=mode)
                h1, h2 = loocv_bandwidths(ref, config)
                config = PredictorConfig(mode=mode, h1=h1, h2=h2)
                yhat, _ = predict_many(test.x, test.coords.points, ref, config, fit)
                sq_errors.extend((yhat - test.y) ** 2)
        except SpatialSdrError as exc:
            trace.append({"rank": d, "cv_error": None, "failure": str(exc)})
            continue
        err = float(np.mean(sq_errors))
        errors[d] = err
        trace.append({"rank": d, "cv_error": err})

    if not errors:
        raise CvFailedError("every candidate rank failed during cross-validation")
    d_star = min(errors, key=lambda d: (errors[d], d))
    return DimSelection(criterion="cv_mpe", d_star=d_star, trace=trace)
