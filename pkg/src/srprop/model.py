"""Separated representations, training data and the data-dependent norm.

A rank-``r`` separated representation of a map ``R^d -> R^M`` is

    q_hat(xi) = sum_l s[l] * u0[l] * prod_i u_i^l(xi_i)

where each univariate factor ``u_i^l`` is expanded in the orthonormal Hermite
basis with coefficient vector ``coeffs[l, i, :]``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, DomainError, ModelFormatError
from .hermite import hermite_table

MODEL_FORMAT = "srprop-model"
MODEL_VERSION = 1


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SeparatedRepresentation:
    """Immutable rank-``r`` separated representation.

    Attributes
    ----------
    scales : (r,) array
        Normalization constants ``s^l``.
    det_factors : (r, M) array
        Deterministic output-space factors ``u0^l``.
    coeffs : (r, d, P) array
        Hermite coefficients of the univariate factors.
    """

    scales: np.ndarray
    det_factors: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        scales = _frozen(self.scales)
        det = _frozen(self.det_factors)
        coeffs = _frozen(self.coeffs)
        if scales.ndim != 1 or det.ndim != 2 or coeffs.ndim != 3:
            raise ContractError("scales, det_factors and coeffs must be 1-, 2- and 3-dimensional")
        r = scales.shape[0]
        if r < 1:
            raise ContractError("separation rank must be at least 1")
        if det.shape[0] != r or coeffs.shape[0] != r:
            raise ContractError(
                f"inconsistent ranks: scales {scales.shape}, det_factors {det.shape}, coeffs {coeffs.shape}"
            )
        if det.shape[1] < 1 or coeffs.shape[1] < 1 or coeffs.shape[2] < 1:
            raise ContractError("d, M and P must all be at least 1")
        if not (np.all(np.isfinite(scales)) and np.all(np.isfinite(det)) and np.all(np.isfinite(coeffs))):
            raise DomainError("model parameters must be finite")
        if np.any(scales < 0):
            raise ContractError("scales must be nonnegative")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "det_factors", det)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def rank(self) -> int:
        return self.scales.shape[0]

    r = rank

    @property
    def d(self) -> int:
        return self.coeffs.shape[1]

    @property
    def M(self) -> int:
        return self.det_factors.shape[1]

    @property
    def P(self) -> int:
        return self.coeffs.shape[2]

    def __eq__(self, other):
        if not isinstance(other, SeparatedRepresentation):
            return NotImplemented
        return (
            np.array_equal(self.scales, other.scales)
            and np.array_equal(self.det_factors, other.det_factors)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def factor_values(self, X) -> np.ndarray:
        """Values ``u_i^l(X[n, i])`` as an ``(N, r, d)`` array."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ContractError(f"expected inputs of shape (N, {self.d}), got {X.shape}")
        basis = hermite_table(self.P, X)  # (N, d, P)
        return np.einsum("nip,lip->nli", basis, self.coeffs)

    def __call__(self, X) -> np.ndarray:
        """Evaluate at a batch of inputs ``X`` of shape ``(N, d)``; returns ``(N, M)``."""
        terms = np.prod(self.factor_values(X), axis=2) * self.scales
        return terms @ self.det_factors

    def evaluate(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.d,):
            raise ContractError(f"expected an input vector of length {self.d}, got shape {xi.shape}")
        return self(xi[None, :])[0]

    def with_permuted_inputs(self, order) -> "SeparatedRepresentation":
        """Model whose input ``j`` is this model's input ``order[j]``."""
        return SeparatedRepresentation(self.scales, self.det_factors, self.coeffs[:, list(order), :])


def evaluate(model: SeparatedRepresentation, xi) -> np.ndarray:
    return model.evaluate(xi)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Paired samples ``(xi_j, q(xi_j))``; ``inputs`` is ``(N, d)``, ``outputs`` ``(N, M)``."""

    inputs: np.ndarray
    outputs: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        X = _frozen(self.inputs)
        Y = _frozen(self.outputs)
        if X.ndim != 2 or Y.ndim != 2:
            raise ContractError("inputs and outputs must be 2-D arrays")
        if X.shape[0] != Y.shape[0]:
            raise ContractError(f"sample counts differ: {X.shape[0]} inputs vs {Y.shape[0]} outputs")
        if X.shape[0] < 1 or X.shape[1] < 1 or Y.shape[1] < 1:
            raise ContractError("a training set needs N >= 1, d >= 1 and M >= 1")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DomainError("training data must be finite")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", Y)

    @property
    def N(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def M(self) -> int:
        return self.outputs.shape[1]

    def subset(self, index) -> "TrainingSet":
        return TrainingSet(self.inputs[index], self.outputs[index], self.rng_seed)


def data_norm(residuals) -> float:
    """``sqrt(mean_j ||row_j||_2^2)`` -- the norm induced by the sample inner product."""
    R = np.asarray(residuals, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    if R.shape[0] == 0:
        raise ContractError("data_norm of an empty sample set")
    if not np.all(np.isfinite(R)):
        raise DomainError("data_norm of non-finite residuals")
    return float(np.sqrt(np.sum(R * R) / R.shape[0]))


def relative_residual(model: SeparatedRepresentation, train: TrainingSet) -> float:
    """``||q - q_hat||_D / ||q||_D`` over the training samples."""
    if model.d != train.d or model.M != train.M:
        raise ContractError(f"model dims (d={model.d}, M={model.M}) do not match data (d={train.d}, M={train.M})")
    denom = data_norm(train.outputs)
    if denom == 0.0:
        raise ZeroDivisionError("relative residual undefined: training outputs are identically zero")
    return data_norm(train.outputs - model(train.inputs)) / denom


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def model_to_dict(model: SeparatedRepresentation) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "basis": "hermite-orthonormal",
        "r": model.rank,
        "d": model.d,
        "M": model.M,
        "P": model.P,
        "scales": model.scales.tolist(),
        "det_factors": model.det_factors.ravel().tolist(),
        "coeffs": model.coeffs.ravel().tolist(),
    }


def model_from_dict(doc) -> SeparatedRepresentation:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object", "$")
    if doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"unknown format tag {doc.get('format')!r}", "$.format")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}", "$.version")
    shape = {}
    for key in ("r", "d", "M", "P"):
        v = doc.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ModelFormatError(f"{key} must be a positive integer, got {v!r}", f"$.{key}")
        shape[key] = v
    r, d, M, P = shape["r"], shape["d"], shape["M"], shape["P"]
    arrays = {}
    for key, size, dims in (("scales", r, (r,)), ("det_factors", r * M, (r, M)), ("coeffs", r * d * P, (r, d, P))):
        values = doc.get(key)
        if not isinstance(values, list):
            raise ModelFormatError(f"{key} must be a list", f"$.{key}")
        if len(values) != size:
            raise ModelFormatError(f"{key} has {len(values)} entries, expected {size}", f"$.{key}")
        for n, v in enumerate(values):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ModelFormatError(f"non-numeric entry {v!r}", f"$.{key}[{n}]")
        arrays[key] = np.array(values, dtype=float).reshape(dims)
    try:
        return SeparatedRepresentation(arrays["scales"], arrays["det_factors"], arrays["coeffs"])
    except (ContractError, DomainError) as exc:
        raise ModelFormatError(str(exc), "$") from exc


def save_model(model: SeparatedRepresentation, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> SeparatedRepresentation:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from exc
    return model_from_dict(doc)


def save_training_csv(train: TrainingSet, path) -> None:
    """Write ``xi_1..xi_d,q_1..q_M`` rows with round-trip float formatting."""
    header = [f"xi_{i + 1}" for i in range(train.d)] + [f"q_{m + 1}" for m in range(train.M)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, y in zip(train.inputs, train.outputs):
            w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])


def load_training_csv(path, rng_seed=None) -> TrainingSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ModelFormatError("empty training file", f"{path}:1")
    header = rows[0]
    d = sum(1 for h in header if h.startswith("xi_"))
    M = sum(1 for h in header if h.startswith("q_"))
    expected = [f"xi_{i + 1}" for i in range(d)] + [f"q_{m + 1}" for m in range(M)]
    if header != expected or d == 0 or M == 0:
        raise ModelFormatError("header must be xi_1,...,xi_d,q_1,...,q_M", f"{path}:1")
    data = np.empty((len(rows) - 1, d + M))
    for n, row in enumerate(rows[1:]):
        if len(row) != d + M:
            raise ModelFormatError(f"expected {d + M} fields, got {len(row)}", f"{path}:{n + 2}")
        try:
            data[n] = [float(v) for v in row]
        except ValueError as exc:
            raise ModelFormatError(str(exc), f"{path}:{n + 2}") from exc
    return TrainingSet(data[:, :d], data[:, d:], rng_seed)
