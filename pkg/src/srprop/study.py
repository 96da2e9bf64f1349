"""Sample-size convergence of surrogate and plain Monte Carlo STD estimates."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .als import fit
from .config import ScenarioConfig
from .errors import FitError
from .model import TrainingSet
from .oracles import build_oracle, draw_samples
from .statistics import analytic_moments

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StudyResult:
    """Relative STD errors, indexed ``errors[method][N]`` -> array over repeats.

    Failed surrogate fits are stored as NaN and excluded from the summaries.
    """

    n_list: tuple
    errors: dict
    reference_std: float
    reference_std_se: float
    qoi: str

    def summary(self, method: str):
        """``(N, n_ok, min, q1, median, q3, max)`` rows for one method."""
        rows = []
        for n in self.n_list:
            v = self.errors[method][n]
            v = v[np.isfinite(v)]
            if v.size == 0:
                rows.append((n, 0) + (float("nan"),) * 5)
                continue
            q = np.percentile(v, [0, 25, 50, 75, 100])
            rows.append((n, int(v.size)) + tuple(float(x) for x in q))
        return rows

    def medians(self, method: str) -> np.ndarray:
        return np.array([r[4] for r in self.summary(method)])

    def loglog_slope(self, method: str) -> float:
        """Least-squares slope of log(median error) against log(N)."""
        med = self.medians(method)
        ok = np.isfinite(med) & (med > 0)
        if ok.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(np.array(self.n_list)[ok]), np.log(med[ok]), 1)[0])


def repeat_seed(base: int, n: int, rep: int) -> int:
    return int(np.random.SeedSequence([int(base), int(n), int(rep)]).generate_state(1)[0])


def convergence_study(cfg: ScenarioConfig, n_list=None, repeats=None, qoi=None) -> StudyResult:
    """Fit ``repeats`` independent surrogates per training size and compare STDs.

    The reference STD of QoI ``qoi`` comes from one large Monte Carlo run of
    the oracle; its standard error is reported with the result.
    """
    st = cfg.study
    n_list = tuple(int(n) for n in (n_list or st.n_list))
    repeats = int(repeats or st.repeats)
    qoi = st.qoi if qoi is None else int(qoi)
    if repeats < 2:
        raise ValueError("repeats must be at least 2")
    if not 0 <= qoi < cfg.M:
        raise ValueError(f"qoi index {qoi} out of range for {cfg.M} outputs")
    oracle = build_oracle(cfg)

    _, _, ref = draw_samples(cfg, oracle, st.n_reference, repeat_seed(st.seed, 0, 2**31 - 1))
    ref_std = float(np.std(ref[:, qoi], ddof=1))
    if not np.isfinite(ref_std) or ref_std <= 0:
        raise RuntimeError("reference Monte Carlo produced a degenerate STD")
    ref_se = ref_std / np.sqrt(2.0 * (st.n_reference - 1))

    errors = {"sr": {}, "mc": {}}
    for n in n_list:
        sr = np.full(repeats, np.nan)
        mc = np.empty(repeats)
        for rep in range(repeats):
            xi, _, out = draw_samples(cfg, oracle, n, repeat_seed(st.seed, n, rep))
            mc[rep] = abs(np.std(out[:, qoi], ddof=1) - ref_std) / ref_std
            als = replace(cfg.als, init_seed=rep)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    model, _ = fit(TrainingSet(xi, out), als)
                sr[rep] = abs(analytic_moments(model).std[qoi] - ref_std) / ref_std
            except FitError as exc:
                log.warning("fit failed for N=%d repeat %d: %s", n, rep, exc)
        errors["sr"][n] = sr
        errors["mc"][n] = mc
    return StudyResult(n_list, errors, ref_std, ref_se, cfg.qoi_names()[qoi])


def write_study_csv(result: StudyResult, path) -> None:
    """Box-plot summary per method and N, with reference metadata as ``#`` lines."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# qoi: {result.qoi}\n")
        fh.write(f"# reference_std: {result.reference_std!r}\n")
        fh.write(f"# reference_std_se: {result.reference_std_se!r}\n")
        fh.write(f"# mc_loglog_slope: {result.loglog_slope('mc')!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "N", "n_ok", "min", "q1", "median", "q3", "max"])
        for method in ("sr", "mc"):
            for row in result.summary(method):
                w.writerow([method, row[0], row[1]] + [repr(x) for x in row[2:]])


def write_study_raw_csv(result: StudyResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "N", "repeat", "relative_error"])
        for method in ("sr", "mc"):
            for n in result.n_list:
                for rep, v in enumerate(result.errors[method][n]):
                    w.writerow([method, n, rep, repr(float(v))])
