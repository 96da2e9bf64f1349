"""Force models and orbit propagation in canonical units."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, ContractError, DomainError, ImpactError
from .atmosphere import EARTH_EQUATORIAL_RADIUS_KM, AtmosphereTable, default_atmosphere
from .gravity import MAX_DEGREE, REFERENCE_RADIUS_KM, StokesTable, default_stokes, harmonic_acceleration, normalization_factor, unnormalized
from .integrator import integrate
from .units import MU_EARTH_KM3_S2, CanonicalUnits

EARTH_ROTATION_RATE = 7.292115e-5  # rad/s


@dataclass(frozen=True)
class CartesianState:
    """Inertial position (DU), velocity (DU/TU) and epoch (TU)."""

    position: np.ndarray
    velocity: np.ndarray
    epoch: float = 0.0

    def __post_init__(self):
        r = np.array(self.position, dtype=float).reshape(-1)
        v = np.array(self.velocity, dtype=float).reshape(-1)
        if r.shape != (3,) or v.shape != (3,):
            raise ContractError("position and velocity must be 3-vectors")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v)) and math.isfinite(self.epoch)):
            raise DomainError("Cartesian state must be finite")
        if not np.linalg.norm(r) > 0:
            raise DomainError("position must be nonzero")
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "position", r)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "epoch", float(self.epoch))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    @classmethod
    def from_array(cls, y, epoch: float = 0.0) -> "CartesianState":
        y = np.asarray(y, dtype=float)
        return cls(y[:3], y[3:6], epoch)

    def __eq__(self, other):
        if not isinstance(other, CartesianState):
            return NotImplemented
        return (np.array_equal(self.position, other.position) and np.array_equal(self.velocity, other.velocity)
                and self.epoch == other.epoch)

    __hash__ = None


@dataclass(frozen=True)
class ForceModelConfig:
    """Physical force-model parameters.

    ``mu`` is in km^3/s^2, ``area_to_mass`` in m^2/kg and
    ``earth_rotation_rate`` in rad/s.  Canonical units are derived from ``mu``.
    """

    mu: float = MU_EARTH_KM3_S2
    harmonic_degree: int = 0
    zonal_only: bool = False
    stokes: StokesTable = field(default_factory=default_stokes)
    drag_enabled: bool = False
    C_D: float = 2.0
    area_to_mass: float = 0.01
    atmosphere: AtmosphereTable = field(default_factory=default_atmosphere)
    earth_rotation_rate: float = EARTH_ROTATION_RATE
    reference_radius_km: float = REFERENCE_RADIUS_KM
    DU_km: float = 6371.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if not (isinstance(self.harmonic_degree, int) and 0 <= self.harmonic_degree <= MAX_DEGREE):
            raise ConfigError(f"harmonic_degree must be an integer in 0..{MAX_DEGREE}")
        if self.harmonic_degree == 1:
            raise ConfigError("harmonic_degree 1 is not meaningful; use 0 or 2..4")
        if self.C_D < 0 or self.area_to_mass < 0:
            raise ConfigError("C_D and area_to_mass must be nonnegative")

    @property
    def units(self) -> CanonicalUnits:
        return CanonicalUnits(self.mu, self.DU_km)


@dataclass(frozen=True, eq=False)
class SampleParameters:
    """Per-sample overrides of uncertain force-model parameters.

    Each field is ``None`` (use the nominal value) or an array with one entry
    per sample.  ``stokes`` maps ``("C" | "S", n, m)`` to normalized values.
    """

    mu: np.ndarray | None = None
    C_D: np.ndarray | None = None
    area_to_mass: np.ndarray | None = None
    stokes: dict = field(default_factory=dict)

    def take(self, index) -> "SampleParameters":
        pick = lambda a: None if a is None else np.asarray(a)[index]
        return SampleParameters(pick(self.mu), pick(self.C_D), pick(self.area_to_mass),
                                {k: np.asarray(v)[index] for k, v in self.stokes.items()})


class Dynamics:
    """Batched equations of motion for one force model.

    Built once per batch; holds the unnormalized coefficients and the
    canonical-unit constants.
    """

    def __init__(self, forces: ForceModelConfig, params: SampleParameters | None = None):
        params = params or SampleParameters()
        units = forces.units
        self.forces = forces
        self.gm = 1.0 if params.mu is None else np.asarray(params.mu, dtype=float) / forces.mu
        self.degree = forces.harmonic_degree
        self.ref_radius = forces.reference_radius_km / units.DU_km
        self.omega = units.rate_to_canonical(forces.earth_rotation_rate)
        self.DU_km = units.DU_km
        if self.degree >= 2:
            C, S = unnormalized(forces.stokes, self.degree, forces.zonal_only)
            if params.stokes:
                batch = len(next(iter(params.stokes.values())))
                C = np.repeat(C[:, :, None], batch, axis=2)
                S = np.repeat(S[:, :, None], batch, axis=2)
                for (kind, n, m), values in params.stokes.items():
                    if n > self.degree or (forces.zonal_only and m > 0):
                        continue
                    target = C if kind == "C" else S
                    target[n, m] = np.asarray(values, dtype=float) * normalization_factor(n, m)
            self.C, self.S = C, S
        self.drag = forces.drag_enabled
        if self.drag:
            cd = forces.C_D if params.C_D is None else np.asarray(params.C_D, dtype=float)
            am = forces.area_to_mass if params.area_to_mass is None else np.asarray(params.area_to_mass, dtype=float)
            # a = -1/2 rho B |v| v with v in DU/TU gives DU/TU^2 after one factor DU in metres
            self.drag_factor = 0.5 * np.asarray(cd * am) * units.DU_km * 1000.0
            self.atmosphere = forces.atmosphere

    def acceleration(self, t: float, r, v):
        """Inertial acceleration for positions ``r`` and velocities ``v`` of shape ``(B, 3)``."""
        rn = np.sqrt(np.sum(r * r, axis=1))
        gm = np.reshape(self.gm, np.shape(self.gm) + (1,)) if np.ndim(self.gm) else self.gm
        acc = -gm * r / rn[:, None] ** 3
        if self.degree >= 2:
            theta = self.omega * t
            c, s = math.cos(theta), math.sin(theta)
            fixed = np.stack([c * r[:, 0] + s * r[:, 1], -s * r[:, 0] + c * r[:, 1], r[:, 2]], axis=1)
            af = harmonic_acceleration(fixed, self.gm, self.ref_radius, self.C, self.S)
            acc = acc + np.stack([c * af[:, 0] - s * af[:, 1], s * af[:, 0] + c * af[:, 1], af[:, 2]], axis=1)
        if self.drag:
            v_rel = v - self.omega * np.stack([-r[:, 1], r[:, 0], np.zeros_like(rn)], axis=1)
            speed = np.sqrt(np.sum(v_rel * v_rel, axis=1))
            rho = self.atmosphere.density(rn * self.DU_km - EARTH_EQUATORIAL_RADIUS_KM)
            acc = acc - (self.drag_factor * rho * speed)[:, None] * v_rel
        return acc

    def rhs(self, t: float, Y):
        return np.concatenate([Y[:, 3:], self.acceleration(t, Y[:, :3], Y[:, 3:])], axis=1)


def acceleration(state: CartesianState, forces: ForceModelConfig) -> np.ndarray:
    """Total acceleration (DU/TU^2) acting on ``state``."""
    dyn = Dynamics(forces)
    return dyn.acceleration(state.epoch, state.position[None, :], state.velocity[None, :])[0]


def _impact_guard(t, Y):
    radii = np.sqrt(np.sum(Y[:, :3] ** 2, axis=1))
    if np.any(radii < 1.0):
        j = int(np.argmin(radii))
        raise ImpactError(f"sample {j} fell below the Earth's surface at t = {t!r} TU",
                          last_time=t, last_state=Y.copy())


def propagate_batch(states, t0: float, t_final: float, forces: ForceModelConfig,
                    tol: float = 1e-13, params: SampleParameters | None = None) -> np.ndarray:
    """Propagate an ``(B, 6)`` array of canonical states from ``t0`` to ``t_final`` (TU)."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != 6:
        raise ContractError("states must have shape (B, 6)")
    dyn = Dynamics(forces, params)
    end, _ = integrate(dyn.rhs, t0, states, t_final, tol, guard=_impact_guard)
    return end


def propagate(state: CartesianState, forces: ForceModelConfig, t_final: float, tol: float = 1e-13) -> CartesianState:
    """Endpoint of the trajectory starting at ``state``, at time ``t_final`` (TU)."""
    end = propagate_batch(state.as_array()[None, :], state.epoch, t_final, forces, tol)
    return CartesianState.from_array(end[0], t_final)


def with_degree(forces: ForceModelConfig, degree: int, **changes) -> ForceModelConfig:
    return replace(forces, harmonic_degree=degree, **changes)
