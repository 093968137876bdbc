"""Shared dense linear-algebra helpers for symmetric positive-definite work.

Positive definiteness is enforced with a single policy used everywhere:
eigenvalue floor 1e-10; if the smallest eigenvalue falls below the floor,
add ``1e-8 * trace/n`` on the diagonal and retry once, then fail.
"""

from __future__ import annotations

import numpy as np

from .exceptions import EigenFailureError, SpatialSdrError

EIG_FLOOR = 1e-10
JITTER_SCALE = 1e-8


def symmetrize(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def pd_eigh(
    m: np.ndarray, err: type[SpatialSdrError]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigendecompose a symmetric matrix, enforcing the PD jitter policy.

    Returns ``(eigvals, eigvecs, m_used)`` with eigenvalues ascending;
    ``m_used`` is ``m`` itself or the jittered copy that passed the floor.
    Raises ``err`` when the retry still leaves an eigenvalue below the floor.
    """
    m = symmetrize(np.asarray(m, dtype=float))
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise EigenFailureError(str(exc)) from exc
    if vals[0] >= EIG_FLOOR:
        return vals, vecs, m
    eps = JITTER_SCALE * float(np.trace(m)) / m.shape[0]
    if eps <= 0.0:
        raise err(f"matrix not positive definite (min eig {vals[0]:.3e})")
    m2 = m + eps * np.eye(m.shape[0])
    vals, vecs = np.linalg.eigh(m2)
    if vals[0] < EIG_FLOOR:
        raise err(
            f"matrix not positive definite after jitter (min eig {vals[0]:.3e})"
        )
    return vals, vecs, m2


def eig_power(vals: np.ndarray, vecs: np.ndarray, power: float) -> np.ndarray:
    """Assemble ``V diag(vals**power) V^T`` from an eigendecomposition."""
    return (vecs * vals**power) @ vecs.T


def eig_apply(
    vals: np.ndarray, vecs: np.ndarray, power: float, b: np.ndarray
) -> np.ndarray:
    """Apply ``V diag(vals**power) V^T`` to ``b`` without forming the matrix."""
    scale = vals**power
    proj = vecs.T @ b
    if proj.ndim == 1:
        return vecs @ (proj * scale)
    return vecs @ (proj * scale[:, None])
