"""Alternating least squares with greedy rank growth.

The fit starts from a single randomly initialized term.  Each sweep solves,
in turn, one linear least-squares problem per input direction (all ``r``
coefficient vectors of that direction at once) and then one for the
deterministic factors.  After every solve the touched factors are rescaled
to unit norm and the scale absorbs the magnitude.  When the relative
residual stops improving at the current rank a new term is appended and the
existing terms are kept.

Every subproblem is solved for the scale-absorbed unknowns ``s^l * c_k^l``
(resp. ``s^l * u0^l``) so the regression columns are built from unit-norm
factors.  The fitted model is the same as for the unscaled block system; only
the column scaling differs.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ContractError, FitError, NumericalError, RankDeficiencyError
from .hermite import hermite_table
from .model import SeparatedRepresentation, TrainingSet, data_norm

log = logging.getLogger(__name__)

CONDITION_WARN = 1e12
INIT_SCALE = 1e-3
INIT_PERTURBATION = 0.1

TERMINATION_REASONS = ("epsilon_met", "max_rank_stalled", "max_sweeps")


class SampleSizeWarning(UserWarning):
    """Fewer samples than the number of unknowns of the requested rank."""


@dataclass(frozen=True)
class AlsConfig:
    epsilon: float = 1e-6
    delta: float = 1e-7
    max_rank: int = 5
    max_sweeps_per_rank: int = 200
    ridge_lambda: float = 0.0
    init_seed: int = 0
    P: int = 4
    line_search: bool = False
    restarts: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")
        if not self.delta > 0:
            raise ContractError("delta must be positive")
        if self.max_rank < 1:
            raise ContractError("max_rank must be at least 1")
        if self.max_sweeps_per_rank < 1:
            raise ContractError("max_sweeps_per_rank must be at least 1")
        if not self.ridge_lambda >= 0:
            raise ContractError("ridge_lambda must be nonnegative")
        if self.P < 1:
            raise ContractError("P must be at least 1")
        if self.restarts < 1:
            raise ContractError("restarts must be at least 1")


@dataclass
class FitReport:
    """Outcome of :func:`fit`.

    ``gamma_history[k]`` lists the relative residual at rank ``k + 1``: the
    value right after the new term was initialized followed by one entry per
    full sweep.  ``half_step_history`` has the same layout but with one entry
    per individual solve (``d`` direction solves and one deterministic solve
    per sweep).  Condition warnings are ``(rank, direction, estimate)`` with
    ``direction=None`` for the deterministic solve.  ``init_seed`` is the seed
    of the attempt that was kept and ``attempts`` the number of fits run.
    """

    final_rank: int
    gamma_history: list = field(default_factory=list)
    half_step_history: list = field(default_factory=list)
    converged: bool = False
    termination_reason: str = ""
    condition_warnings: list = field(default_factory=list)
    init_seed: int = 0
    attempts: int = 1

    @property
    def final_gamma(self) -> float:
        return self.gamma_history[-1][-1]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["final_gamma"] = self.final_gamma
        out["condition_warnings"] = [list(w) for w in self.condition_warnings]
        return out


def _solve_ls(A, b, lam, context):
    """Least-squares solve returning (solution, condition estimate)."""
    if lam == 0.0:
        sol, _, rank, sv = np.linalg.lstsq(A, b, rcond=None)
        if rank < A.shape[1]:
            raise RankDeficiencyError(
                f"{context}: regression matrix is rank deficient ({rank} < {A.shape[1]}); "
                "use ridge_lambda > 0"
            )
        cond = sv[0] / sv[-1]
    else:
        normal = A.T @ A + lam * np.eye(A.shape[1])
        sol = np.linalg.solve(normal, A.T @ b)
        cond = np.linalg.cond(normal)
    if not np.all(np.isfinite(sol)):
        raise NumericalError(f"{context}: non-finite least-squares solution")
    return sol, cond


class _AlsState:
    """Mutable fitting workspace.

    Holds the model parameters plus the tabulated Hermite basis and factor
    values at the training inputs, so each solve only recomputes what changed.
    """

    def __init__(self, train: TrainingSet, P: int, scales, det, coeffs):
        self.X = train.inputs
        self.Y = train.outputs
        self.N, self.d = self.X.shape
        self.M = self.Y.shape[1]
        self.P = P
        self.basis = hermite_table(P, self.X)  # (N, d, P)
        self.s = np.array(scales, dtype=float)
        self.u0 = np.array(det, dtype=float)
        self.c = np.array(coeffs, dtype=float)
        self.F = np.einsum("nip,lip->nli", self.basis, self.c)  # (N, r, d)
        self.q_norm = data_norm(self.Y)
        self.warnings = []

    @classmethod
    def from_model(cls, model: SeparatedRepresentation, train: TrainingSet):
        if model.d != train.d or model.M != train.M:
            raise ContractError("model and training data dimensions differ")
        return cls(train, model.P, model.scales, model.det_factors, model.coeffs)

    @property
    def rank(self):
        return self.s.shape[0]

    def model(self) -> SeparatedRepresentation:
        return SeparatedRepresentation(self.s, self.u0, self.c)

    def predict(self):
        return (np.prod(self.F, axis=2) * self.s) @ self.u0

    def gamma(self) -> float:
        if self.q_norm == 0.0:
            raise ZeroDivisionError("relative residual undefined: training outputs are identically zero")
        R = self.Y - self.predict()
        if not np.all(np.isfinite(R)):
            raise NumericalError("non-finite surrogate prediction during ALS")
        return float(np.sqrt(np.sum(R * R) / self.N)) / self.q_norm

    def _note_condition(self, cond, direction):
        if cond > CONDITION_WARN:
            self.warnings.append((self.rank, direction, float(cond)))
            log.warning("rank %d, direction %s: condition estimate %.3g", self.rank, direction, cond)

    def direction_matrix(self, k):
        """Regression matrix (N*M, r*P) for direction ``k`` with unit scales."""
        others = np.prod(np.delete(self.F, k, axis=2), axis=2)  # (N, r)
        A = np.einsum("nl,lm,np->nmlp", others, self.u0, self.basis[:, k, :])
        return A.reshape(self.N * self.M, self.rank * self.P)

    def update_direction(self, k, lam):
        A = self.direction_matrix(k)
        z, cond = _solve_ls(A, self.Y.reshape(-1), lam, f"rank {self.rank}, direction {k}")
        self._note_condition(cond, k)
        sc = z.reshape(self.rank, self.P)  # rows are s^l * c_k^l
        u = self.basis[:, k, :] @ sc.T  # (N, r)
        norms = np.sqrt(np.mean(u * u, axis=0))
        for l in range(self.rank):
            if norms[l] > 0.0:
                self.c[l, k] = sc[l] / norms[l]
                self.s[l] = norms[l]
                self.F[:, l, k] = u[:, l] / norms[l]
            else:
                self.c[l, k] = 0.0
                self.c[l, k, 0] = 1.0
                self.s[l] = 0.0
                self.F[:, l, k] = 1.0

    def det_matrix(self):
        return np.prod(self.F, axis=2)  # (N, r)

    def update_det(self, lam):
        Z, cond = _solve_ls(self.det_matrix(), self.Y, lam, f"rank {self.rank}, deterministic factors")
        self._note_condition(cond, None)
        norms = np.linalg.norm(Z, axis=1)
        for l in range(self.rank):
            if norms[l] > 0.0:
                self.u0[l] = Z[l] / norms[l]
                self.s[l] = norms[l]
            else:
                self.u0[l] = 0.0
                self.u0[l, 0] = 1.0
                self.s[l] = 0.0

    def snapshot(self):
        return self.c.copy(), self.s[:, None] * self.u0

    def extrapolate(self, previous, jump) -> bool:
        """Try ``x + jump * (x - x_prev)`` on all parameters; keep it only if gamma drops."""
        c_prev, w_prev = previous
        if c_prev.shape != self.c.shape:
            return False
        c_now, w_now = self.snapshot()
        g_now = self.gamma()
        saved = (self.c, self.s, self.u0, self.F)
        c = c_now + jump * (c_now - c_prev)
        w = w_now + jump * (w_now - w_prev)
        F = np.einsum("nip,lip->nli", self.basis, c)
        fnorm = np.sqrt(np.mean(F * F, axis=0))  # (r, d)
        wnorm = np.linalg.norm(w, axis=1)
        if np.any(fnorm == 0.0) or np.any(wnorm == 0.0):
            return False
        self.c = c / fnorm[:, :, None]
        self.F = F / fnorm[None]
        self.u0 = w / wnorm[:, None]
        self.s = wnorm * np.prod(fnorm, axis=1)
        if self.gamma() < g_now:
            return True
        self.c, self.s, self.u0, self.F = saved
        return False

    def append_term(self, scale, det, coeffs):
        self.s = np.append(self.s, scale)
        self.u0 = np.vstack([self.u0.reshape(-1, self.M), det[None, :]])
        self.c = np.concatenate([self.c.reshape(-1, self.d, self.P), coeffs[None]], axis=0)
        newF = np.einsum("nip,ip->ni", self.basis, coeffs)
        self.F = np.concatenate([self.F.reshape(self.N, -1, self.d), newF[:, None, :]], axis=1)


def _new_term(train: TrainingSet, P: int, seed: int, index: int):
    rng = np.random.default_rng([seed, index])
    coeffs = INIT_PERTURBATION * rng.standard_normal((train.d, P))
    coeffs[:, 0] += 1.0
    det = rng.standard_normal(train.M)
    basis = hermite_table(P, train.inputs)
    u = np.einsum("nip,ip->ni", basis, coeffs)
    norms = np.sqrt(np.mean(u * u, axis=0))
    for i in range(train.d):
        if norms[i] > 0:
            coeffs[i] /= norms[i]
        else:
            coeffs[i] = 0.0
            coeffs[i, 0] = 1.0
    det /= np.linalg.norm(det)
    q_norm = data_norm(train.outputs)
    scale = INIT_SCALE * (q_norm if q_norm > 0 else 1.0)
    return scale, det, coeffs


def init_rank_term(model, train: TrainingSet, seed: int, P: int | None = None) -> SeparatedRepresentation:
    """Append one seeded random term to ``model`` (or build a rank-1 model from ``None``).

    Each univariate factor starts near a constant: its leading coefficient is
    ``1 + 0.1 z`` and the rest ``0.1 z`` with ``z`` standard normal.  The
    deterministic factor is a standard-normal vector.  Draws come from a
    generator keyed on ``(seed, new term index)``; the univariate factors are
    then scaled to unit data norm and the deterministic factor to unit 2-norm.
    The new scale is ``1e-3 * ||q||_D``.  Existing terms are copied unchanged.
    """
    if model is None:
        if P is None:
            raise ContractError("P is required when starting from an empty model")
        scale, det, coeffs = _new_term(train, P, seed, 0)
        return SeparatedRepresentation([scale], det[None, :], coeffs[None])
    if model.d != train.d or model.M != train.M:
        raise ContractError("model and training data dimensions differ")
    scale, det, coeffs = _new_term(train, model.P, seed, model.rank)
    return SeparatedRepresentation(
        np.append(model.scales, scale),
        np.vstack([model.det_factors, det]),
        np.concatenate([model.coeffs, coeffs[None]], axis=0),
    )


def sweep_direction(model: SeparatedRepresentation, train: TrainingSet, k: int, ridge_lambda: float = 0.0):
    """Re-solve all coefficient vectors of input direction ``k`` (0-based).

    Returns the updated model; only ``coeffs[:, k]`` and ``scales`` change.
    """
    if not 0 <= k < model.d:
        raise ContractError(f"direction index {k} out of range for d={model.d}")
    state = _AlsState.from_model(model, train)
    state.update_direction(k, ridge_lambda)
    return state.model()


def solve_det_factors(model: SeparatedRepresentation, train: TrainingSet, ridge_lambda: float = 0.0):
    """Re-solve the deterministic factors; returns the updated model."""
    state = _AlsState.from_model(model, train)
    state.update_det(ridge_lambda)
    return state.model()


def _recommended_samples(r, P, d, M):
    return r * P * d + r * M


def fit(train: TrainingSet, config: AlsConfig = AlsConfig()):
    """Fit a separated representation to ``train``.

    Returns ``(model, report)``.  Sweeping at a given rank stops when the
    relative residual ``gamma`` falls to ``epsilon`` (done), when it improved
    by less than ``delta`` over the last two sweeps, or when
    ``max_sweeps_per_rank`` is reached; in the latter two cases the rank is
    increased unless ``max_rank`` has been reached.

    With ``restarts > 1`` a fit that ends above ``epsilon`` is repeated from
    the seeds ``init_seed + 1, init_seed + 2, ...`` and the attempt with the
    smallest final residual is returned.
    """
    best = None
    for attempt in range(config.restarts):
        model, report = _fit_once(train, config, config.init_seed + attempt)
        if best is None or report.final_gamma < best[1].final_gamma:
            best = (model, report)
        if report.converged:
            break
    best[1].attempts = attempt + 1
    return best


def _fit_once(train: TrainingSet, config: AlsConfig, seed: int):
    N, M, d, P = train.N, train.M, train.d, config.P
    if N * M < 1:
        raise FitError("empty training set")

    def check_samples(r):
        need = _recommended_samples(r, P, d, M)
        if N < need:
            warnings.warn(
                f"N={N} samples is below the {need} unknowns of a rank-{r} representation",
                SampleSizeWarning,
                stacklevel=3,
            )

    check_samples(1)
    first = init_rank_term(None, train, seed, P)
    state = _AlsState.from_model(first, train)
    lam = config.ridge_lambda

    report = FitReport(final_rank=1, init_seed=seed)
    reason = None
    while True:
        g = state.gamma()
        report.gamma_history.append([g])
        report.half_step_history.append([g])
        stalled = False
        sweeps = 0
        while True:
            sweeps += 1
            previous = state.snapshot()
            try:
                for k in range(d):
                    state.update_direction(k, lam)
                    report.half_step_history[-1].append(state.gamma())
                state.update_det(lam)
                g = state.gamma()
                if config.line_search and sweeps > 1 and state.extrapolate(previous, sweeps ** (1.0 / 3.0)):
                    report.half_step_history[-1].append(g)
                    g = state.gamma()
            except NumericalError as exc:
                raise NumericalError(f"sweep {sweeps} at rank {state.rank}: {exc}") from exc
            report.half_step_history[-1].append(g)
            hist = report.gamma_history[-1]
            hist.append(g)
            log.debug("rank %d sweep %d gamma %.3e", state.rank, sweeps, g)
            if g <= config.epsilon:
                reason = "epsilon_met"
                break
            if len(hist) >= 3 and hist[-3] - hist[-1] < config.delta:
                stalled = True
                break
            if sweeps >= config.max_sweeps_per_rank:
                break
        if reason == "epsilon_met":
            break
        if state.rank >= config.max_rank:
            reason = "max_rank_stalled" if stalled else "max_sweeps"
            break
        new_rank = state.rank + 1
        if N * M < new_rank:
            raise FitError(f"N*M = {N * M} observations cannot determine rank {new_rank} deterministic factors")
        check_samples(new_rank)
        scale, det, coeffs = _new_term(train, P, seed, state.rank)
        state.append_term(scale, det, coeffs)

    report.final_rank = state.rank
    report.converged = reason == "epsilon_met"
    report.termination_reason = reason
    report.condition_warnings = list(state.warnings)
    return state.model(), report
