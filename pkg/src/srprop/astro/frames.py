"""Radial / intrack / crosstrack frame centred on a reference state."""

from __future__ import annotations

import numpy as np

from ..errors import FrameDegenerateError
from .forces import CartesianState


def ric_matrix(position, velocity) -> np.ndarray:
    """Rows are the radial, intrack and crosstrack unit vectors.

    Accepts single 3-vectors or ``(N, 3)`` batches; a batch returns ``(N, 3, 3)``.
    """
    r = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    h = np.cross(r, v)
    rn = np.linalg.norm(r, axis=-1, keepdims=True)
    hn = np.linalg.norm(h, axis=-1, keepdims=True)
    if np.any(hn <= 1e-14 * rn * np.linalg.norm(v, axis=-1, keepdims=True)) or np.any(rn == 0):
        raise FrameDegenerateError("position and velocity are parallel; the RIC frame is undefined")
    radial = r / rn
    cross = h / hn
    intrack = np.cross(cross, radial)
    return np.stack([radial, intrack, cross], axis=-2)


def ric_transform(reference: CartesianState, target: CartesianState) -> np.ndarray:
    """Position of ``target`` relative to ``reference``, expressed in RIC."""
    return ric_matrix(reference.position, reference.velocity) @ (target.position - reference.position)


def ric_offsets(reference: CartesianState, positions) -> np.ndarray:
    """RIC coordinates of many positions ``(N, 3)`` about one reference."""
    R = ric_matrix(reference.position, reference.velocity)
    return (np.asarray(positions, dtype=float) - reference.position) @ R.T
