"""Ground-truth maps from standard-normal inputs to quantities of interest."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .astro.elements import (
    cartesian_to_equinoctial_array,
    equinoctial_to_cartesian_array,
    equinoctial_to_keplerian_array,
    retrograde_factor,
    wrap_angle,
)
from .astro.forces import SampleParameters, propagate_batch
from .astro.sampling import sample_initial_states
from .config import ScenarioConfig, stokes_key
from .model import SeparatedRepresentation


def make_poly_target(d: int, M: int, rank: int = 2, degree: int = 3, seed: int = 0,
                     spread: float = 1.0, active: int | None = None) -> SeparatedRepresentation:
    """Random separated polynomial of the given rank and per-input degree.

    Each term depends on ``active`` inputs (all ``d`` when ``None``); terms
    use disjoint inputs whenever ``rank * active <= d``.  A dependent factor
    is ``1`` plus Hermite terms with ``N(0, spread^2 / active)`` coefficients,
    which keeps the product well scaled; other factors are exactly ``1``.
    Output directions are orthonormal when ``rank <= M`` and otherwise random
    unit vectors with nonnegative entries, so terms never cancel.
    """
    k = d if active is None else int(active)
    if not 1 <= k <= d:
        raise ValueError("active must lie in 1..d")
    rng = np.random.default_rng([int(seed), d, M, rank, degree, k])
    P = degree + 1
    coeffs = np.zeros((rank, d, P))
    coeffs[:, :, 0] = 1.0
    order = rng.permutation(d)
    for l in range(rank):
        if rank * k <= d:
            chosen = order[l * k:(l + 1) * k]
        else:
            chosen = rng.permutation(d)[:k]
        coeffs[l, chosen, 1:] = rng.normal(0.0, spread / math.sqrt(k), size=(k, P - 1))
    if rank <= M:
        det = np.linalg.qr(rng.normal(size=(M, rank)))[0].T
    else:
        det = np.abs(rng.normal(size=(rank, M)))
    det /= np.linalg.norm(det, axis=1, keepdims=True)
    return SeparatedRepresentation(np.ones(rank), det, coeffs)


class PolynomialOracle:
    """``q(xi) = target(xi)`` for a seeded random separated polynomial."""

    def __init__(self, cfg: ScenarioConfig):
        o = cfg.oracle
        self.forces = cfg.forces.build()
        self.target = make_poly_target(cfg.d, o.outputs, o.rank, o.degree, o.seed, o.spread, o.active)

    def __call__(self, xi, physical=None) -> np.ndarray:
        return self.target(xi)


def _to_canonical_scale(cfg: ScenarioConfig, units) -> np.ndarray:
    if cfg.coordinate_system == "cartesian":
        return np.array([1 / units.DU_km] * 3 + [1 / (1000.0 * units.VU_km_s)] * 3)
    return np.array([1 / units.DU_km, 1, 1, 1, 1, 1])


def input_distribution(cfg: ScenarioConfig, forces):
    """Mean and covariance of the physical inputs in canonical units.

    The first six entries are the state; random force parameters follow in
    their natural units (km^3/s^2, -, m^2/kg, normalized Stokes values).
    """
    n = len(cfg.state_mean)
    if cfg.oracle.kind == "dynamics":
        scale = _to_canonical_scale(cfg, forces.units)
    else:
        scale = np.ones(n)
    mean = list(np.asarray(cfg.state_mean) * scale)
    cov = np.zeros((cfg.d, cfg.d))
    cov[:n, :n] = cfg.state_covariance_matrix() * np.outer(scale, scale)
    for j, p in enumerate(cfg.random_parameters):
        key = stokes_key(p.name)
        if key is None:
            nominal, sigma = getattr(forces, p.name), 0.0
        else:
            kind, deg, order = key
            table = forces.stokes
            nominal = (table.C if kind == "C" else table.S)[deg, order]
            sigma = (table.sigma_C if kind == "C" else table.sigma_S)[deg, order]
        mean.append(nominal if p.mean is None else p.mean)
        cov[n + j, n + j] = (sigma if p.std is None else p.std) ** 2
    return np.array(mean), cov


def sample_inputs(cfg: ScenarioConfig, forces, N: int, seed: int):
    """Seeded ``(xi, physical)`` pair for ``N`` samples."""
    mean, cov = input_distribution(cfg, forces)
    return sample_initial_states(mean, cov, N, seed)


def _propagate_chunk(args):
    states, t_final, forces, tol, params = args
    return propagate_batch(states, 0.0, t_final, forces, tol, params)


class OrbitOracle:
    """Propagate sampled initial states and report Cartesian or equinoctial QoIs.

    Equinoctial mean longitudes are unwrapped about the nominal trajectory's
    final value so a spread wider than the wrap seam stays continuous.
    """

    def __init__(self, cfg: ScenarioConfig, base_dir=None):
        self.cfg = cfg
        self.forces = cfg.forces.build(base_dir)
        units = self.forces.units
        self.t_final = units.hours_to_tu(cfg.propagation.span_hours)
        self.tol = cfg.propagation.tol
        self.chunk = cfg.propagation.chunk_size
        self.workers = cfg.propagation.workers
        self.n_state = len(cfg.state_mean)
        self.equinoctial = cfg.coordinate_system == "equinoctial"
        mean, _ = input_distribution(cfg, self.forces)
        self.nominal = mean
        self.lambda_reference = 0.0
        if self.equinoctial:
            if cfg.retrograde_factor is None:
                i = equinoctial_to_keplerian_array(mean[None, :6], 1)[0, 2]
                self.f_r = retrograde_factor(i)
            else:
                self.f_r = cfg.retrograde_factor
            self.lambda_reference = float(self._evaluate(mean[None, :], wrap=False)[0, 5])

    def _parameters(self, physical) -> SampleParameters:
        fields = {"stokes": {}}
        for j, p in enumerate(self.cfg.random_parameters):
            column = physical[:, self.n_state + j]
            key = stokes_key(p.name)
            if key is None:
                fields[p.name] = column
            else:
                fields["stokes"][key] = column
        return SampleParameters(**fields)

    def _evaluate(self, physical, wrap=True) -> np.ndarray:
        physical = np.asarray(physical, dtype=float)
        params = self._parameters(physical)
        gm = 1.0 if params.mu is None else params.mu / self.forces.mu
        states = physical[:, :6]
        if self.equinoctial:
            states = equinoctial_to_cartesian_array(states, self.f_r, gm)
        bounds = [(s, min(s + self.chunk, len(states))) for s in range(0, len(states), self.chunk)]
        jobs = [(states[a:b], self.t_final, self.forces, self.tol, params.take(slice(a, b))) for a, b in bounds]
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(_propagate_chunk, jobs))
        else:
            parts = [_propagate_chunk(job) for job in jobs]
        final = np.concatenate(parts, axis=0)
        if not self.equinoctial:
            return final
        eq = cartesian_to_equinoctial_array(final, self.f_r, gm)
        if wrap:
            eq[:, 5] = wrap_angle(eq[:, 5], self.lambda_reference)
        return eq

    def __call__(self, xi, physical) -> np.ndarray:
        return self._evaluate(physical)


def build_oracle(cfg: ScenarioConfig, base_dir=None):
    return PolynomialOracle(cfg) if cfg.oracle.kind == "poly" else OrbitOracle(cfg, base_dir)


def draw_samples(cfg: ScenarioConfig, oracle, N: int, seed: int):
    """Sample inputs and evaluate the oracle; returns ``(xi, physical, outputs)``."""
    xi, physical = sample_inputs(cfg, oracle.forces, N, seed)
    return xi, physical, oracle(xi, physical)
