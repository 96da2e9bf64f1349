"""Piecewise-exponential atmospheric density."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..errors import ConfigError

EARTH_EQUATORIAL_RADIUS_KM = 6378.137
_HEADER = ["h_min_km", "h_max_km", "rho0_kg_m3", "h0_km", "H_km"]


@dataclass(frozen=True, eq=False)
class AtmosphereTable:
    """Altitude bands ``[h_min, h_max)`` with ``rho = rho0 * exp(-(h - h0) / H)``.

    Below the first band the first band's law is extrapolated; above the last
    band its law continues.  Densities are in kg/m^3, altitudes in km.
    """

    h_min: np.ndarray
    h_max: np.ndarray
    rho0: np.ndarray
    h0: np.ndarray
    scale_height: np.ndarray

    def __post_init__(self):
        cols = [np.atleast_1d(np.array(getattr(self, k), dtype=float))
                for k in ("h_min", "h_max", "rho0", "h0", "scale_height")]
        n = cols[0].size
        if n < 1 or any(c.shape != (n,) for c in cols):
            raise ConfigError("atmosphere columns must be non-empty and equally long")
        h_min, h_max, rho0, h0, H = cols
        if np.any(rho0 < 0) or np.any(H <= 0) or np.any(h_max <= h_min):
            raise ConfigError("atmosphere bands need rho0 >= 0, H > 0 and h_max > h_min")
        if np.any(h_min[1:] != h_max[:-1]):
            raise ConfigError("atmosphere bands must be contiguous and sorted")
        for k, c in zip(("h_min", "h_max", "rho0", "h0", "scale_height"), cols):
            c.setflags(write=False)
            object.__setattr__(self, k, c)

    @classmethod
    def single_band(cls, rho0: float, h0: float, scale_height: float) -> "AtmosphereTable":
        return cls([-np.inf], [np.inf], [rho0], [h0], [scale_height])

    def density(self, altitude_km):
        """Density in kg/m^3 at geometric altitude ``altitude_km``."""
        h = np.asarray(altitude_km, dtype=float)
        band = np.clip(np.searchsorted(self.h_max, h, side="right"), 0, self.h_min.size - 1)
        return self.rho0[band] * np.exp(-(h - self.h0[band]) / self.scale_height[band])

    def __eq__(self, other):
        if not isinstance(other, AtmosphereTable):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("h_min", "h_max", "rho0", "h0", "scale_height"))

    __hash__ = None


def read_atmosphere_csv(path_or_file) -> AtmosphereTable:
    fh = open(path_or_file, newline="") if not hasattr(path_or_file, "read") else path_or_file
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _HEADER:
            raise ConfigError("atmosphere table header must be " + ",".join(_HEADER))
        rows = []
        for line, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ConfigError(f"atmosphere row at line {line} needs 5 fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ConfigError(f"bad atmosphere row at line {line}: {exc}") from exc
    if not rows:
        raise ConfigError("atmosphere table has no bands")
    data = np.array(rows)
    return AtmosphereTable(*data.T)


def default_atmosphere() -> AtmosphereTable:
    with resources.files(__package__).joinpath("data/atmosphere.csv").open("r", newline="") as fh:
        return read_atmosphere_csv(fh)
