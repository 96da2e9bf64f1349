"""Orbit dynamics, element conversions and initial-state sampling in canonical units."""

from .atmosphere import AtmosphereTable, default_atmosphere, read_atmosphere_csv
from .elements import (
    EquinoctialState,
    KeplerianElements,
    cartesian_to_equinoctial,
    cartesian_to_equinoctial_array,
    cartesian_to_keplerian,
    equinoctial_to_cartesian,
    equinoctial_to_cartesian_array,
    equinoctial_to_keplerian,
    keplerian_to_cartesian,
    keplerian_to_equinoctial,
    solve_kepler,
    wrap_angle,
)
from .forces import CartesianState, Dynamics, ForceModelConfig, SampleParameters, acceleration, propagate, propagate_batch
from .frames import ric_matrix, ric_offsets, ric_transform
from .gravity import StokesTable, default_stokes, read_stokes_csv
from .sampling import sample_initial_states, semidefinite_cholesky
from .units import CanonicalUnits

__all__ = [
    "AtmosphereTable", "CanonicalUnits", "CartesianState", "Dynamics", "EquinoctialState", "ForceModelConfig",
    "KeplerianElements", "SampleParameters", "StokesTable", "acceleration", "cartesian_to_equinoctial",
    "cartesian_to_equinoctial_array", "cartesian_to_keplerian", "default_atmosphere", "default_stokes",
    "equinoctial_to_cartesian", "equinoctial_to_cartesian_array", "equinoctial_to_keplerian",
    "keplerian_to_cartesian", "keplerian_to_equinoctial", "propagate", "propagate_batch", "read_atmosphere_csv",
    "read_stokes_csv", "ric_matrix", "ric_offsets", "ric_transform", "sample_initial_states",
    "semidefinite_cholesky", "solve_kepler", "wrap_angle",
]
