"""Orthonormal probabilists' Hermite polynomials.

``psi_p`` (``p = 1..P``) is the degree ``p - 1`` Hermite polynomial scaled so
that ``E[psi_p(xi) psi_q(xi)] = delta_pq`` for ``xi ~ N(0, 1)``.  In particular
``psi_1 == 1`` and every higher basis function has zero mean, which is what the
closed-form moment expressions in :mod:`srprop.statistics` rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError


@dataclass(frozen=True)
class BasisSpec:
    """Number of basis functions ``P``; the highest degree is ``P - 1``."""

    degree_count: int

    def __post_init__(self):
        if int(self.degree_count) != self.degree_count or self.degree_count < 1:
            raise ContractError(f"degree_count must be a positive integer, got {self.degree_count!r}")


def hermite_table(P: int, xi) -> np.ndarray:
    """Evaluate ``psi_1 .. psi_P`` at every entry of ``xi``.

    Returns an array of shape ``xi.shape + (P,)``.  Uses the normalized
    three-term recurrence

        psi_{n+2} = (xi * psi_{n+1} - sqrt(n) * psi_n) / sqrt(n + 1)

    (``n`` being the degree of ``psi_{n+1}``), which stays well conditioned
    far beyond the degrees used here.
    """
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)):
        raise DomainError("Hermite basis evaluated at a non-finite point")
    out = np.empty(xi.shape + (P,))
    out[..., 0] = 1.0
    if P > 1:
        out[..., 1] = xi
    for n in range(1, P - 1):
        out[..., n + 1] = (xi * out[..., n] - np.sqrt(n) * out[..., n - 1]) / np.sqrt(n + 1)
    return out


def eval_basis(spec: BasisSpec, xi: float) -> np.ndarray:
    """Return ``[psi_1(xi), ..., psi_P(xi)]`` for a scalar ``xi``."""
    if np.ndim(xi) != 0:
        raise ContractError("eval_basis expects a scalar; use hermite_table for arrays")
    return hermite_table(spec.degree_count, xi)


def eval_factor(spec: BasisSpec, coeffs, xi):
    """Evaluate the univariate factor ``sum_p coeffs[p] * psi_p(xi)``.

    ``xi`` may be a scalar or an array; the result has the shape of ``xi``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (spec.degree_count,):
        raise ContractError(f"expected {spec.degree_count} coefficients, got shape {coeffs.shape}")
    values = hermite_table(spec.degree_count, xi) @ coeffs
    return float(values) if np.ndim(values) == 0 else values
