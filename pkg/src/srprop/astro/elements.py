"""Keplerian, equinoctial and Cartesian element conversions.

Array functions take ``(N, 6)`` inputs and work in canonical units with
gravitational parameter ``mu`` (1 for the nominal model).  Element order is
``(a, e, i, raan, argp, M)`` for Keplerian and ``(a, h, k, p, q, lambda)``
for equinoctial sets.  The ``p, q`` pair uses ``tan(i/2) ** f_r``, so the
retrograde set (``f_r = -1``) is regular at ``i = pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DomainError, IterationError, SingularityError
from .forces import CartesianState

TWO_PI = 2.0 * math.pi
RETROGRADE_THRESHOLD = math.radians(175.0)
SINGULAR_TOL = 1e-9


def wrap_angle(x, center=0.0):
    """Map ``x`` into ``(center - pi, center + pi]``."""
    return center + math.pi - np.mod(math.pi - (np.asarray(x) - center), TWO_PI)


def retrograde_factor(inclination) -> int:
    """+1 for direct orbits, -1 once the inclination exceeds 175 degrees."""
    return -1 if inclination > RETROGRADE_THRESHOLD else 1


@dataclass(frozen=True)
class KeplerianElements:
    a: float
    e: float
    i: float
    raan: float
    argp: float
    mean_anomaly: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.e, self.i, self.raan, self.argp, self.mean_anomaly])


@dataclass(frozen=True)
class EquinoctialState:
    """Equinoctial elements; ``lam`` is stored wrapped to ``(-pi, pi]``."""

    a: float
    h: float
    k: float
    p: float
    q: float
    lam: float
    f_r: int = 1

    def __post_init__(self):
        values = (self.a, self.h, self.k, self.p, self.q, self.lam)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("equinoctial elements must be finite")
        if self.f_r not in (1, -1):
            raise ContractError("retrograde factor must be +1 or -1")
        if not self.a > 0:
            raise DomainError("semimajor axis must be positive")
        if self.h * self.h + self.k * self.k >= 1.0:
            raise DomainError("h^2 + k^2 must be below 1 (elliptic orbit)")
        object.__setattr__(self, "lam", float(wrap_angle(self.lam)))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.h, self.k, self.p, self.q, self.lam])

    @classmethod
    def from_array(cls, x, f_r: int = 1) -> "EquinoctialState":
        return cls(*(float(v) for v in x), f_r=f_r)


def solve_kepler(M, e, tol: float = 1e-13, max_iter: int = 50):
    """Eccentric anomaly from mean anomaly by Newton iteration."""
    M = np.asarray(M, dtype=float)
    e = np.broadcast_to(np.asarray(e, dtype=float), M.shape)
    if np.any((e < 0) | (e >= 1)):
        raise DomainError("Kepler's equation needs 0 <= e < 1")
    Mw = wrap_angle(M)
    E = np.where(e < 0.8, Mw + e * np.sin(Mw), np.pi * np.sign(Mw) + (Mw == 0))
    for _ in range(max_iter):
        step = (E - e * np.sin(E) - Mw) / (1.0 - e * np.cos(E))
        E = E - step
        if np.all(np.abs(step) < tol):
            return E + (M - Mw)
    raise IterationError(f"Kepler's equation did not converge in {max_iter} iterations")


def _true_from_eccentric(E, e):
    return 2.0 * np.arctan2(np.sqrt(1 + e) * np.sin(E / 2), np.sqrt(1 - e) * np.cos(E / 2))


def _eccentric_from_true(nu, e):
    return 2.0 * np.arctan2(np.sqrt(1 - e) * np.sin(nu / 2), np.sqrt(1 + e) * np.cos(nu / 2))


def _rows(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != 6:
        raise ContractError(f"expected an (N, 6) array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("elements must be finite")
    return x


def keplerian_to_equinoctial_array(kep, f_r=1) -> np.ndarray:
    kep = _rows(kep)
    a, e, i, raan, argp, M = kep.T
    f = np.broadcast_to(np.asarray(f_r), a.shape)
    if np.any((e < 0) | (e >= 1)):
        raise DomainError("only elliptic orbits (0 <= e < 1) are supported")
    if np.any((f == 1) & (np.abs(i - np.pi) < SINGULAR_TOL)):
        raise SingularityError("inclination is within 1e-9 of pi; use the retrograde set (f_r = -1)")
    if np.any((f == -1) & (np.abs(i) < SINGULAR_TOL)):
        raise SingularityError("inclination is within 1e-9 of 0; use the direct set (f_r = +1)")
    tan_half = np.sin(i) / (1.0 + f * np.cos(i))
    longitude = argp + f * raan
    return np.stack([
        a,
        e * np.sin(longitude),
        e * np.cos(longitude),
        tan_half * np.sin(raan),
        tan_half * np.cos(raan),
        wrap_angle(M + longitude),
    ], axis=1)


def equinoctial_to_keplerian_array(eq, f_r=1) -> np.ndarray:
    """Inverse of :func:`keplerian_to_equinoctial_array`.

    Undefined angles are pinned: ``raan = 0`` when ``p = q = 0`` and
    ``argp = 0`` when ``h = k = 0``.  Angles come back in ``(-pi, pi]``.
    """
    eq = _rows(eq)
    a, h, k, p, q, lam = eq.T
    f = np.broadcast_to(np.asarray(f_r), a.shape)
    if np.any(a <= 0):
        raise DomainError("semimajor axis must be positive")
    e = np.hypot(h, k)
    if np.any(e >= 1):
        raise DomainError("h^2 + k^2 must be below 1")
    t = np.hypot(p, q)
    raan = np.arctan2(p, q)
    i = np.where(f == 1, 2.0 * np.arctan(t), 2.0 * np.arctan2(1.0, t))
    argp = np.where(e > 0, np.arctan2(h, k), 0.0) - f * raan
    M = lam - argp - f * raan
    return np.stack([a, e, i, wrap_angle(raan), wrap_angle(argp), wrap_angle(M)], axis=1)


def keplerian_to_cartesian_array(kep, mu=1.0) -> np.ndarray:
    kep = _rows(kep)
    a, e, i, raan, argp, M = kep.T
    mu = np.asarray(mu, dtype=float)
    E = solve_kepler(M, e)
    cE, sE = np.cos(E), np.sin(E)
    b = a * np.sqrt(1 - e * e)
    x_pf, y_pf = a * (cE - e), b * sE
    Edot = np.sqrt(mu / a**3) / (1 - e * cE)
    vx_pf, vy_pf = -a * sE * Edot, b * cE * Edot
    cO, sO, cw, sw, ci, si = np.cos(raan), np.sin(raan), np.cos(argp), np.sin(argp), np.cos(i), np.sin(i)
    P = np.stack([cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si], axis=1)
    Q = np.stack([-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si], axis=1)
    r = x_pf[:, None] * P + y_pf[:, None] * Q
    v = vx_pf[:, None] * P + vy_pf[:, None] * Q
    return np.concatenate([r, v], axis=1)


def cartesian_to_keplerian_array(states, mu=1.0) -> np.ndarray:
    Y = _rows(states)
    r, v = Y[:, :3], Y[:, 3:]
    mu = np.asarray(mu, dtype=float)
    rn = np.linalg.norm(r, axis=1)
    if np.any(rn <= 0):
        raise DomainError("position must be nonzero")
    hvec = np.cross(r, v)
    hn = np.linalg.norm(hvec, axis=1)
    if np.any(hn <= 0):
        raise SingularityError("rectilinear orbit: position and velocity are parallel")
    energy = 0.5 * np.sum(v * v, axis=1) - mu / rn
    if np.any(energy >= 0):
        raise DomainError("only elliptic orbits are supported")
    a = -mu / (2 * energy)
    mu_col = np.reshape(mu, (-1, 1)) if np.ndim(mu) else mu
    evec = np.cross(v, hvec) / mu_col - r / rn[:, None]
    e = np.linalg.norm(evec, axis=1)
    w = hvec / hn[:, None]
    i = np.arccos(np.clip(w[:, 2], -1.0, 1.0))
    node = np.stack([-w[:, 1], w[:, 0], np.zeros_like(rn)], axis=1)
    nn = np.linalg.norm(node, axis=1)
    equatorial = nn < 1e-14
    node = np.where(equatorial[:, None], np.array([1.0, 0.0, 0.0]), node / np.where(equatorial, 1.0, nn)[:, None])
    raan = np.arctan2(node[:, 1], node[:, 0])
    across = np.cross(w, node)
    argp = np.arctan2(np.sum(evec * across, axis=1), np.sum(evec * node, axis=1))
    argp = np.where(e > 0, argp, 0.0)
    u = np.arctan2(np.sum(r * across, axis=1), np.sum(r * node, axis=1))
    nu = u - argp
    E = _eccentric_from_true(nu, e)
    M = E - e * np.sin(E)
    return np.stack([a, e, i, wrap_angle(raan), wrap_angle(argp), wrap_angle(M)], axis=1)


def equinoctial_to_cartesian_array(eq, f_r=1, mu=1.0) -> np.ndarray:
    return keplerian_to_cartesian_array(equinoctial_to_keplerian_array(eq, f_r), mu)


def cartesian_to_equinoctial_array(states, f_r=1, mu=1.0) -> np.ndarray:
    return keplerian_to_equinoctial_array(cartesian_to_keplerian_array(states, mu), f_r)


# scalar conveniences


def keplerian_to_equinoctial(kep: KeplerianElements, f_r: int | None = None) -> EquinoctialState:
    f = retrograde_factor(kep.i) if f_r is None else f_r
    return EquinoctialState.from_array(keplerian_to_equinoctial_array(kep.as_array()[None], f)[0], f)


def equinoctial_to_keplerian(eq: EquinoctialState) -> KeplerianElements:
    return KeplerianElements(*equinoctial_to_keplerian_array(eq.as_array()[None], eq.f_r)[0])


def equinoctial_to_cartesian(eq: EquinoctialState, mu: float = 1.0, epoch: float = 0.0) -> CartesianState:
    return CartesianState.from_array(equinoctial_to_cartesian_array(eq.as_array()[None], eq.f_r, mu)[0], epoch)


def cartesian_to_equinoctial(state: CartesianState, mu: float = 1.0, f_r: int | None = None) -> EquinoctialState:
    kep = cartesian_to_keplerian_array(state.as_array()[None], mu)
    f = retrograde_factor(kep[0, 2]) if f_r is None else f_r
    return EquinoctialState.from_array(keplerian_to_equinoctial_array(kep, f)[0], f)


def keplerian_to_cartesian(kep: KeplerianElements, mu: float = 1.0, epoch: float = 0.0) -> CartesianState:
    return CartesianState.from_array(keplerian_to_cartesian_array(kep.as_array()[None], mu)[0], epoch)


def cartesian_to_keplerian(state: CartesianState, mu: float = 1.0) -> KeplerianElements:
    return KeplerianElements(*cartesian_to_keplerian_array(state.as_array()[None], mu)[0])
