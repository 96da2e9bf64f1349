"""Correlated Gaussian initial states from standard-normal inputs."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, DecompositionError
from ..statistics import standard_normal_sample


def semidefinite_cholesky(cov) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T = cov`` for a PSD matrix.

    Uses LAPACK when ``cov`` is positive definite.  Otherwise a column whose
    pivot is numerically zero is left as zero, so degenerate directions
    (zero-variance inputs) receive no noise.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ContractError("covariance must be square")
    if not np.all(np.isfinite(cov)):
        raise ContractError("covariance must be finite")
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-300):
        raise DecompositionError("covariance is not symmetric")
    n = cov.shape[0]
    trace = float(np.trace(cov))
    eigmin = float(np.linalg.eigvalsh(cov).min()) if n else 0.0
    if eigmin < -1e-12 * max(trace, 0.0) or trace < 0:
        raise DecompositionError(f"covariance is not positive semidefinite (smallest eigenvalue {eigmin:.3e})")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    L = np.zeros_like(cov)
    floor = 1e-14 * max(trace, 0.0)
    for j in range(n):
        pivot = cov[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= floor:
            continue
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (cov[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def sample_initial_states(mean, covariance, N: int, seed: int):
    """Draw ``xi ~ N(0, I)`` and map to ``q0 = mean + L xi``.

    Returns ``(xi, q0)``, both ``(N, len(mean))``.
    """
    mean = np.asarray(mean, dtype=float)
    if mean.ndim != 1:
        raise ContractError("mean must be a vector")
    L = semidefinite_cholesky(covariance)
    if L.shape[0] != mean.size:
        raise ContractError("mean and covariance sizes differ")
    xi = standard_normal_sample(N, mean.size, seed)
    return xi, mean + xi @ L.T
