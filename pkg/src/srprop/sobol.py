"""First-order Sobol indices estimated by Monte Carlo on the surrogate.

For QoI ``m`` and input ``i`` the index is ``V(E[q_m | xi_i]) / V(q_m)``.
The conditional second moment ``U_{i,m}`` is estimated with the pick-freeze
product of two independent input samples that share only column ``i``.  The
QoI is centered with its exact mean before forming the products, which
leaves the estimand unchanged but removes the ``E^2 / V`` noise amplification
that otherwise swamps QoIs with a large mean (e.g. a semimajor axis).

These are first-order indices even though they are sometimes labelled
"total" in the literature they come from; for additive models they sum to one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .hermite import hermite_table
from .model import SeparatedRepresentation
from .statistics import analytic_covariance, analytic_mean, standard_normal_chunks


@dataclass(frozen=True, eq=False)
class SobolResult:
    indices: np.ndarray  # (d, M)
    n_samples: int
    seed_pair: tuple
    variance: np.ndarray  # (M,)
    mean: np.ndarray  # (M,)
    degenerate: np.ndarray  # (M,) bool, True where the variance is zero

    def clamped(self) -> np.ndarray:
        """Indices clipped to ``[0, 1]`` for display."""
        return np.clip(self.indices, 0.0, 1.0)


def sobol_indices(model: SeparatedRepresentation, N: int, seeds=(0, 1)) -> SobolResult:
    if N < 2:
        raise ContractError("need at least two samples")
    seed_a, seed_b = (int(s) for s in seeds)
    if seed_a == seed_b:
        raise ContractError("the two sample sets need distinct seeds")
    mean = analytic_mean(model)
    var = np.diag(analytic_covariance(model)).copy()
    degenerate = var <= 0.0
    d, M = model.d, model.M
    acc = np.zeros((d, M))
    for (_, xa), (_, xb) in zip(standard_normal_chunks(N, d, seed_a), standard_normal_chunks(N, d, seed_b)):
        ga = model(xa) - mean
        for i in range(d):
            mixed = xb.copy()
            mixed[:, i] = xa[:, i]
            acc[i] += np.sum(ga * (model(mixed) - mean), axis=0)
    U = acc / (N - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.where(degenerate, 0.0, U / np.where(degenerate, 1.0, var))
    return SobolResult(S, N, (seed_a, seed_b), var, mean, degenerate)


def write_sobol_csv(result: SobolResult, path, input_names=None, qoi_names=None) -> None:
    """Rows are inputs, columns QoIs; metadata lines start with ``#``."""
    d, M = result.indices.shape
    input_names = input_names or [f"xi_{i + 1}" for i in range(d)]
    qoi_names = qoi_names or [f"q_{m + 1}" for m in range(M)]
    with open(path, "w", newline="") as fh:
        fh.write("# estimator: first-order pick-freeze on centered surrogate\n")
        fh.write(f"# n_samples: {result.n_samples}\n")
        fh.write(f"# seed_pair: {result.seed_pair[0]} {result.seed_pair[1]}\n")
        fh.write("# variance: " + " ".join(repr(float(v)) for v in result.variance) + "\n")
        fh.write("# degenerate_qoi: " + " ".join(n for n, g in zip(qoi_names, result.degenerate) if g) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["input"] + list(qoi_names))
        for name, row in zip(input_names, result.indices):
            w.writerow([name] + [repr(float(v)) for v in row])


def read_sobol_csv(path):
    """Return ``(input_names, qoi_names, indices)`` from :func:`write_sobol_csv` output."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    qoi_names = rows[0][1:]
    names = [r[0] for r in rows[1:]]
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return names, qoi_names, values


def factor_variability_table(model: SeparatedRepresentation, n_points: int = 81, lo: float = -4.0, hi: float = 4.0):
    """Tabulate ``|u_i^l(xi)|`` on a uniform grid.

    Returns ``(grid, values)`` with ``values[i, l, :]`` the absolute factor of
    input ``i`` in term ``l``.
    """
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo and n_points >= 2):
        raise ContractError("grid must be finite with hi > lo and at least two points")
    grid = np.linspace(lo, hi, n_points)
    basis = hermite_table(model.P, grid)  # (G, P)
    values = np.abs(np.einsum("gp,lip->ilg", basis, model.coeffs))
    return grid, values


def factor_ranges(values) -> np.ndarray:
    """Spread ``max - min`` of each tabulated factor, shape ``(d, r)``."""
    return values.max(axis=2) - values.min(axis=2)


def write_factor_table_csv(grid, values, path, input_names=None) -> None:
    d, r, _ = values.shape
    input_names = input_names or [f"xi_{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["input", "term"] + [repr(float(x)) for x in grid])
        for i in range(d):
            for l in range(r):
                w.writerow([input_names[i], l + 1] + [repr(float(v)) for v in values[i, l]])
