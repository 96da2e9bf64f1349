"""Adaptive Dormand-Prince 5(4) integration of a batch of states.

All states in a batch share one step size, chosen so the worst sample meets
the tolerance.  A sample's result therefore depends on which other samples
share its batch; callers that need reproducible output must batch the same
way every time.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, PropagationError

MIN_STEP = 1e-14

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _error_norm(err, y_old, y_new, tol):
    # absolute below magnitude 1, relative above; worst component of worst sample
    scale = tol * np.maximum(1.0, np.maximum(np.abs(y_old), np.abs(y_new)))
    return float(np.max(np.abs(err) / scale))


def _initial_step(rhs, t0, y0, f0, tol, direction_span):
    scale = tol + tol * np.abs(y0)
    d0 = np.max(np.sqrt(np.mean((y0 / scale) ** 2, axis=1)))
    d1 = np.max(np.sqrt(np.mean((f0 / scale) ** 2, axis=1)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = np.max(np.sqrt(np.mean(((f1 - f0) / scale) ** 2, axis=1))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def integrate(rhs, t0: float, y0, t1: float, tol: float, guard=None):
    """Advance ``y0`` (shape ``(B, n)``) from ``t0`` to ``t1``.

    ``rhs(t, Y)`` returns the batched derivative.  ``guard(t, Y)``, if given,
    is called after every accepted step and may raise to abort.  Returns the
    endpoint and the number of accepted steps.
    """
    if not (1e-14 <= tol <= 1e-6):
        raise ContractError("tolerance must lie in [1e-14, 1e-6]")
    if t1 < t0:
        raise ContractError("final time precedes the initial epoch")
    y = np.array(y0, dtype=float)
    if y.ndim != 2:
        raise ContractError("states must be a (B, n) array")
    t = float(t0)
    if t1 == t0:
        return y, 0
    f = rhs(t, y)
    h = _initial_step(rhs, t, y, f, tol, t1 - t0)
    steps = 0
    k = [None] * 7
    while t < t1:
        if h < MIN_STEP:
            raise PropagationError(f"step size underflow at t = {t!r}", last_time=t, last_state=y.copy())
        last = t + h >= t1
        if last:
            h = t1 - t
        k[0] = f
        for s in range(1, 7):
            incr = sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0.0)
            k[s] = rhs(t + _C[s] * h, y + h * incr)
        y_new = y + h * sum(b * k[j] for j, b in enumerate(_B5) if b != 0.0)
        err = h * sum(e * k[j] for j, e in enumerate(_E))
        norm = _error_norm(err, y, y_new, tol)
        if not np.isfinite(norm):
            h *= 0.1
            continue
        if norm <= 1.0:
            t = t1 if last else t + h
            y = y_new
            f = k[6]
            steps += 1
            if guard is not None:
                guard(t, y)
            factor = 5.0 if norm == 0 else min(5.0, max(0.2, 0.9 * norm ** -0.2))
        else:
            factor = max(0.2, 0.9 * norm ** -0.2)
        h *= factor
    return y, steps
