"""Moments, sampling, histograms and validation of a fitted representation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .model import SeparatedRepresentation, TrainingSet

SAMPLE_CHUNK = 65536


@dataclass(frozen=True, eq=False)
class MomentSummary:
    mean: np.ndarray
    covariance: np.ndarray
    source: str  # "analytic" or "sampled(N)"

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def analytic_mean(model: SeparatedRepresentation) -> np.ndarray:
    """Exact mean of the surrogate under standard-normal inputs.

    Only ``psi_1`` has nonzero expectation, so each term contributes
    ``s^l u0^l prod_i c_{i,1}^l``.
    """
    weights = model.scales * np.prod(model.coeffs[:, :, 0], axis=1)
    return weights @ model.det_factors


def _gram(model: SeparatedRepresentation) -> np.ndarray:
    # E[prod_i u_i^l u_i^l'] = prod_i <c_i^l, c_i^l'> by orthonormality
    return np.prod(np.einsum("lip,kip->lki", model.coeffs, model.coeffs), axis=2)


def analytic_covariance(model: SeparatedRepresentation) -> np.ndarray:
    """Exact ``M x M`` covariance of the surrogate."""
    W = model.scales[:, None] * model.det_factors  # (r, M)
    second = W.T @ _gram(model) @ W
    mu = analytic_mean(model)
    cov = second - np.outer(mu, mu)
    return 0.5 * (cov + cov.T)


def analytic_moments(model: SeparatedRepresentation) -> MomentSummary:
    return MomentSummary(analytic_mean(model), analytic_covariance(model), "analytic")


def standard_normal_chunks(N: int, d: int, seed, chunk: int = SAMPLE_CHUNK):
    """Yield ``(start, xi)`` blocks of a seeded ``N x d`` standard-normal sample.

    Block ``b`` is drawn from a generator keyed on ``(seed, b)``, so the full
    sample does not depend on how the blocks are consumed.
    """
    if N < 1:
        raise ContractError("sample count must be at least 1")
    for b, start in enumerate(range(0, N, chunk)):
        n = min(chunk, N - start)
        rng = np.random.default_rng([int(seed), b])
        yield start, rng.standard_normal((n, d))


def standard_normal_sample(N: int, d: int, seed, chunk: int = SAMPLE_CHUNK) -> np.ndarray:
    out = np.empty((N, d))
    for start, xi in standard_normal_chunks(N, d, seed, chunk):
        out[start:start + xi.shape[0]] = xi
    return out


def sample_surrogate(model: SeparatedRepresentation, N: int, seed: int) -> np.ndarray:
    """Evaluate ``model`` at ``N`` seeded i.i.d. standard-normal inputs; returns ``(N, M)``."""
    out = np.empty((N, model.M))
    for start, xi in standard_normal_chunks(N, model.d, seed):
        out[start:start + xi.shape[0]] = model(xi)
    return out


def sampled_moments(samples) -> MomentSummary:
    samples = np.asarray(samples, dtype=float)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(samples.shape[1], samples.shape[1])
    return MomentSummary(samples.mean(axis=0), cov, f"sampled({samples.shape[0]})")


def freedman_diaconis_bins(samples, floor: int = 10) -> int:
    """Freedman-Diaconis bin count, at least ``floor`` and at most ``max(floor, n)``.

    The upper cap matters when the interquartile range is tiny relative to the
    full range, which would otherwise ask for an astronomical number of bins.
    """
    samples = np.asarray(samples, dtype=float)
    lo, hi = samples.min(), samples.max()
    if hi == lo:
        return 1
    q75, q25 = np.percentile(samples, [75, 25])
    width = 2.0 * (q75 - q25) / np.cbrt(samples.size)
    if width <= 0:
        return floor
    cap = max(floor, samples.size)
    count = (hi - lo) / width
    return floor if not np.isfinite(count) else int(min(cap, max(floor, np.ceil(count))))


def histogram(samples, bins: int | None = None):
    """Equal-width histogram over ``[min, max]``; returns ``(edges, counts)``.

    With ``bins=None`` the Freedman-Diaconis count is used (at least 10).  If
    all samples are equal the result is one degenerate bin ``[v, v]`` holding
    every sample.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ContractError("histogram of an empty sample")
    if bins is None:
        bins = freedman_diaconis_bins(samples)
    if bins < 1:
        raise ContractError("bins must be at least 1")
    lo, hi = samples.min(), samples.max()
    if lo == hi:
        return np.array([lo, hi]), np.array([samples.size])
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    return edges, counts


@dataclass(frozen=True, eq=False)
class ValidationTable:
    residual_rms: np.ndarray
    sample_rms: np.ndarray
    n_samples: int

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.residual_rms / self.sample_rms


def validation_rms(model: SeparatedRepresentation, holdout: TrainingSet) -> ValidationTable:
    """Per-QoI RMS of the surrogate residual and of the held-out samples.

    The holdout must not overlap the training data; that is not checked here.
    """
    if holdout.N < 1:
        raise ContractError("empty holdout set")
    if holdout.d != model.d or holdout.M != model.M:
        raise ContractError("holdout dimensions do not match the model")
    resid = holdout.outputs - model(holdout.inputs)
    return ValidationTable(
        residual_rms=np.sqrt(np.mean(resid**2, axis=0)),
        sample_rms=np.sqrt(np.mean(holdout.outputs**2, axis=0)),
        n_samples=holdout.N,
    )
