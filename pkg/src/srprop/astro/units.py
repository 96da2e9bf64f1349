"""Canonical units: distances in Earth radii, time scaled so that GM = 1."""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_MEAN_RADIUS_KM = 6371.0
MU_EARTH_KM3_S2 = 3.986e5


@dataclass(frozen=True)
class CanonicalUnits:
    mu: float = MU_EARTH_KM3_S2  # km^3/s^2
    DU_km: float = EARTH_MEAN_RADIUS_KM

    def __post_init__(self):
        if not (self.mu > 0 and self.DU_km > 0):
            raise ValueError("mu and DU must be positive")

    @property
    def TU_s(self) -> float:
        return math.sqrt(self.DU_km**3 / self.mu)

    @property
    def VU_km_s(self) -> float:
        return self.DU_km / self.TU_s

    def km_to_du(self, x):
        return x / self.DU_km

    def du_to_km(self, x):
        return x * self.DU_km

    def km_s_to_vu(self, v):
        return v / self.VU_km_s

    def m_s_to_vu(self, v):
        return v / (1000.0 * self.VU_km_s)

    def vu_to_km_s(self, v):
        return v * self.VU_km_s

    def hours_to_tu(self, hours):
        return hours * 3600.0 / self.TU_s

    def rate_to_canonical(self, rad_per_s):
        return rad_per_s * self.TU_s
