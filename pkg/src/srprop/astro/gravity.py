"""Low-degree spherical-harmonic gravity via the Cunningham V/W recursion.

Coefficients are stored fully normalized (as published) and converted to
unnormalized values when a model is prepared.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ..errors import ConfigError

MAX_DEGREE = 4
REFERENCE_RADIUS_KM = 6378.1363


def normalization_factor(n: int, m: int) -> float:
    """``N_nm`` with ``C_unnormalized = N_nm * C_normalized``."""
    delta = 1.0 if m == 0 else 0.0
    return math.sqrt((2.0 - delta) * (2 * n + 1) * math.factorial(n - m) / math.factorial(n + m))


@dataclass(frozen=True, eq=False)
class StokesTable:
    """Normalized ``C_nm``, ``S_nm`` and their 1-sigma uncertainties.

    Arrays are ``(MAX_DEGREE + 1, MAX_DEGREE + 1)`` indexed ``[n, m]``;
    entries not listed in the source table are zero.
    """

    C: np.ndarray
    S: np.ndarray
    sigma_C: np.ndarray = field(default=None)
    sigma_S: np.ndarray = field(default=None)

    def __post_init__(self):
        shape = (MAX_DEGREE + 1, MAX_DEGREE + 1)
        for name in ("C", "S", "sigma_C", "sigma_S"):
            value = getattr(self, name)
            arr = np.zeros(shape) if value is None else np.array(value, dtype=float)
            if arr.shape != shape:
                raise ConfigError(f"Stokes array {name} must have shape {shape}")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"Stokes array {name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.sigma_C < 0) or np.any(self.sigma_S < 0):
            raise ConfigError("Stokes sigmas must be nonnegative")

    def entries(self):
        """Listed ``(n, m)`` pairs with ``n >= 2``, in degree-then-order order."""
        return [(n, m) for n in range(2, MAX_DEGREE + 1) for m in range(n + 1)
                if self.C[n, m] != 0 or self.S[n, m] != 0 or self.sigma_C[n, m] != 0 or self.sigma_S[n, m] != 0]

    def with_value(self, kind: str, n: int, m: int, value: float) -> "StokesTable":
        arrays = {k: np.array(getattr(self, k)) for k in ("C", "S", "sigma_C", "sigma_S")}
        arrays[kind][n, m] = value
        return StokesTable(**arrays)

    def __eq__(self, other):
        if not isinstance(other, StokesTable):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("C", "S", "sigma_C", "sigma_S"))

    __hash__ = None


def read_stokes_csv(path_or_file) -> StokesTable:
    """Parse an ``n,m,C,S,sigma_C,sigma_S`` table."""
    shape = (MAX_DEGREE + 1, MAX_DEGREE + 1)
    arrays = {k: np.zeros(shape) for k in ("C", "S", "sigma_C", "sigma_S")}
    fh = open(path_or_file, newline="") if not hasattr(path_or_file, "read") else path_or_file
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["n", "m", "C", "S", "sigma_C", "sigma_S"]:
            raise ConfigError("Stokes table header must be n,m,C,S,sigma_C,sigma_S")
        for line, row in enumerate(reader, start=2):
            try:
                n, m = int(row["n"]), int(row["m"])
                values = {k: float(row[k]) for k in arrays}
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad Stokes row at line {line}: {exc}") from exc
            if not (2 <= n <= MAX_DEGREE and 0 <= m <= n):
                raise ConfigError(f"Stokes entry ({n}, {m}) at line {line} is outside degree 2..{MAX_DEGREE}")
            for k, v in values.items():
                arrays[k][n, m] = v
    return StokesTable(**arrays)


def default_stokes() -> StokesTable:
    """The bundled low-degree coefficient table."""
    with resources.files(__package__).joinpath("data/stokes.csv").open("r", newline="") as fh:
        return read_stokes_csv(fh)


def unnormalized(table: StokesTable, degree: int, zonal_only: bool = False):
    """Unnormalized ``(C, S)`` arrays truncated to ``degree``, with ``C_00 = 0``.

    The central term is left out so that the harmonic sum is a pure
    perturbation; the point-mass part is added separately.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ConfigError(f"harmonic degree must lie in 0..{MAX_DEGREE}")
    C = np.zeros((degree + 1, degree + 1))
    S = np.zeros((degree + 1, degree + 1))
    for n in range(2, degree + 1):
        for m in range((0 if zonal_only else n) + 1):
            f = normalization_factor(n, m)
            C[n, m] = table.C[n, m] * f
            S[n, m] = table.S[n, m] * f
    return C, S


def _col(values, like):
    """Reshape a per-degree vector to broadcast against ``like`` rows."""
    return np.reshape(values, (-1,) + (1,) * (np.ndim(like) - 1))


def _sample_axis(coef):
    """Coefficients as ``(n, m, 1)`` or ``(n, m, B)`` for row-wise broadcasting."""
    return coef[:, :, None] if coef.ndim == 2 else coef


def harmonic_acceleration(r_fixed, gm, ref_radius, C, S):
    """Perturbing acceleration in the body-fixed frame.

    Parameters
    ----------
    r_fixed : (B, 3) array
        Body-fixed positions.
    gm : float or (B,) array
        Gravitational parameter in the same units as ``r_fixed``.
    ref_radius : float
        Reference radius of the coefficients.
    C, S : arrays
        Unnormalized coefficients, shape ``(n_max + 1, n_max + 1)`` or
        ``(n_max + 1, n_max + 1, B)`` for per-sample values.
    """
    n_max = C.shape[0] - 1
    C, S = _sample_axis(np.asarray(C)), _sample_axis(np.asarray(S))
    x, y, z = r_fixed[:, 0], r_fixed[:, 1], r_fixed[:, 2]
    r2 = x * x + y * y + z * z
    rho = ref_radius * ref_radius / r2
    x0, y0, z0 = ref_radius * x / r2, ref_radius * y / r2, ref_radius * z / r2
    size = n_max + 2
    zero = np.zeros_like(x)
    Vl = [[zero] * size for _ in range(size)]
    Wl = [[zero] * size for _ in range(size)]
    Vl[0][0] = ref_radius / np.sqrt(r2)
    Vl[1][0] = z0 * Vl[0][0]
    for n in range(2, size):
        Vl[n][0] = ((2 * n - 1) / n) * z0 * Vl[n - 1][0] - ((n - 1) / n) * rho * Vl[n - 2][0]
    for m in range(1, size):
        Vl[m][m] = (2 * m - 1) * (x0 * Vl[m - 1][m - 1] - y0 * Wl[m - 1][m - 1])
        Wl[m][m] = (2 * m - 1) * (x0 * Wl[m - 1][m - 1] + y0 * Vl[m - 1][m - 1])
        if m + 1 < size:
            Vl[m + 1][m] = (2 * m + 1) * z0 * Vl[m][m]
            Wl[m + 1][m] = (2 * m + 1) * z0 * Wl[m][m]
        for n in range(m + 2, size):
            a, b = (2 * n - 1) / (n - m), (n + m - 1) / (n - m)
            Vl[n][m] = a * z0 * Vl[n - 1][m] - b * rho * Vl[n - 2][m]
            Wl[n][m] = a * z0 * Wl[n - 1][m] - b * rho * Wl[n - 2][m]
    V = np.array(Vl)
    W = np.array(Wl)

    # sums over degree n for each order m, vectorised with slices
    n = np.arange(n_max + 1)
    c0 = C[2:, 0]
    ax = -np.sum(c0 * V[3:, 1], axis=0)
    ay = -np.sum(c0 * W[3:, 1], axis=0)
    az = -np.sum(_col(n[2:] + 1, c0) * c0 * V[3:, 0], axis=0)
    for m in range(1, n_max + 1):
        lo = max(m, 2)
        c, s = C[lo:, m], S[lo:, m]
        fac = _col(0.5 * (n[lo:] - m + 1) * (n[lo:] - m + 2), c)
        Vp, Wp = V[lo + 1:, m + 1], W[lo + 1:, m + 1]
        Vm, Wm = V[lo + 1:, m - 1], W[lo + 1:, m - 1]
        Vc, Wc = V[lo + 1:, m], W[lo + 1:, m]
        ax = ax + np.sum(0.5 * (-c * Vp - s * Wp) + fac * (c * Vm + s * Wm), axis=0)
        ay = ay + np.sum(0.5 * (-c * Wp + s * Vp) + fac * (-c * Wm + s * Vm), axis=0)
        az = az + np.sum(_col(n[lo:] - m + 1, c) * (-c * Vc - s * Wc), axis=0)
    scale = np.asarray(gm) / (ref_radius * ref_radius)
    return np.stack([ax, ay, az], axis=-1) * np.reshape(scale, np.shape(scale) + (1,))
