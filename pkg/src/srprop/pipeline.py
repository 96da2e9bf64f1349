"""End-to-end run: sample, propagate, fit, validate, analyse, report.

Each stage writes its artifacts into the run directory as soon as it
finishes, so a failed run keeps everything produced before the failure.
``manifest.json`` lists every artifact with its SHA-256 and records the
stage that failed, if any.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .als import fit
from .astro.forces import CartesianState
from .astro.frames import ric_offsets
from .config import ScenarioConfig, dumps
from .errors import ConfigError
from .model import TrainingSet, save_model, save_training_csv
from .oracles import OrbitOracle, build_oracle, draw_samples
from .sobol import factor_variability_table, sobol_indices, write_factor_table_csv, write_sobol_csv
from .statistics import analytic_moments, histogram, sample_surrogate, validation_rms

log = logging.getLogger(__name__)

RIC_SURROGATE_ROWS = 10_000


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``cause`` holds the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunResult:
    run_dir: Path
    manifest: dict
    model: object = None
    report: object = None
    validation: object = None
    sobol: object = None
    moments: object = None


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_validation_csv(table, qoi_names, path):
    _write_rows(path, ["qoi", "residual_rms", "sample_rms", "ratio"],
                [[q, _fmt(r), _fmt(s), _fmt(x)] for q, r, s, x in
                 zip(qoi_names, table.residual_rms, table.sample_rms, table.ratio)])


def write_moments_csv(moments, holdout: np.ndarray, qoi_names, path):
    """Analytic surrogate moments next to holdout-sample moments with standard errors."""
    n = holdout.shape[0]
    h_mean = holdout.mean(axis=0)
    h_std = holdout.std(axis=0, ddof=1) if n > 1 else np.zeros(holdout.shape[1])
    mean_se = h_std / np.sqrt(n)
    std_se = h_std / np.sqrt(2.0 * max(n - 1, 1))
    rows = [[q, _fmt(m), _fmt(s), _fmt(hm), _fmt(hs), _fmt(mse), _fmt(sse)]
            for q, m, s, hm, hs, mse, sse in zip(qoi_names, moments.mean, moments.std, h_mean, h_std, mean_se, std_se)]
    _write_rows(path, ["qoi", "sr_mean", "sr_std", "holdout_mean", "holdout_std", "holdout_mean_se", "holdout_std_se"], rows)


def write_histogram_csv(edges, counts, path):
    _write_rows(path, ["bin_lo", "bin_hi", "count"],
                [[_fmt(lo), _fmt(hi), int(c)] for lo, hi, c in zip(edges[:-1], edges[1:], counts)])


class _Run:
    def __init__(self, cfg: ScenarioConfig, run_dir: Path, base_dir):
        self.cfg = cfg
        self.dir = run_dir
        self.base_dir = base_dir
        self.artifacts = []
        self.stages = []

    def path(self, name) -> Path:
        self.artifacts.append(name)
        return self.dir / name

    def manifest(self, status, failure_stage=None, error=None) -> dict:
        s = self.cfg.sampling
        doc = {
            "package": "srprop",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scenario": self.cfg.name,
            "status": status,
            "completed_stages": list(self.stages),
            "failure_stage": failure_stage,
            "error": error,
            "seeds": {
                "train": s.seed_train,
                "validate": s.seed_validate,
                "surrogate_mc": s.seed_mc,
                "sobol": list(s.seed_sobol),
                "reference": s.seed_reference,
                "als_init": self.cfg.als.init_seed,
                "oracle": self.cfg.oracle.seed,
            },
            "artifacts": {name: sha256_file(self.dir / name) for name in sorted(set(self.artifacts))
                          if (self.dir / name).exists()},
        }
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return doc


def run_pipeline(cfg: ScenarioConfig, output_dir=None, base_dir=None) -> RunResult:
    """Run every stage for ``cfg`` and return the in-memory results.

    Raises :class:`PipelineError` (after writing the manifest) when a stage
    fails.
    """
    run_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(cfg, run_dir, base_dir)
    result = RunResult(run_dir, {})
    qois = cfg.qoi_names()
    inputs = cfg.input_names()
    s = cfg.sampling
    stage = "config"
    try:
        run.path("config.toml").write_text(dumps(cfg))
        run.stages.append(stage)

        stage = "propagate"
        oracle = build_oracle(cfg, base_dir)
        xi_t, phys_t, out_t = draw_samples(cfg, oracle, s.n_train, s.seed_train)
        train = TrainingSet(xi_t, out_t, s.seed_train)
        save_training_csv(train, run.path("training.csv"))
        xi_v, phys_v, out_v = draw_samples(cfg, oracle, s.n_validate, s.seed_validate)
        holdout = TrainingSet(xi_v, out_v, s.seed_validate)
        save_training_csv(holdout, run.path("validation.csv"))
        run.stages.append(stage)

        stage = "fit"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model, report = fit(train, cfg.als)
        save_model(model, run.path("model.json"))
        with open(run.path("fit_report.json"), "w") as fh:
            json.dump(report.to_dict(), fh, indent=1)
            fh.write("\n")
        result.model, result.report = model, report
        run.stages.append(stage)

        stage = "validate"
        table = validation_rms(model, holdout)
        write_validation_csv(table, qois, run.path("validation_table.csv"))
        result.validation = table
        run.stages.append(stage)

        stage = "stats"
        moments = analytic_moments(model)
        write_moments_csv(moments, holdout.outputs, qois, run.path("moments.csv"))
        samples = sample_surrogate(model, s.n_surrogate_mc, s.seed_mc)
        for m, q in enumerate(qois):
            edges, counts = histogram(samples[:, m], s.histogram_bins)
            write_histogram_csv(edges, counts, run.path(f"histogram_{q}.csv"))
        result.moments = moments
        run.stages.append(stage)

        stage = "sobol"
        sob = sobol_indices(model, s.n_sobol, s.seed_sobol)
        write_sobol_csv(sob, run.path("sobol.csv"), inputs, qois)
        grid, values = factor_variability_table(model)
        write_factor_table_csv(grid, values, run.path("factors.csv"), inputs)
        result.sobol = sob
        run.stages.append(stage)

        if cfg.coordinate_system == "cartesian" and isinstance(oracle, OrbitOracle):
            stage = "ric"
            pick = int(np.random.default_rng(s.seed_reference).integers(train.N))
            reference = CartesianState.from_array(train.outputs[pick])
            rows = []
            for source, states in (("truth", np.vstack([train.outputs, holdout.outputs])),
                                   ("surrogate", samples[:RIC_SURROGATE_ROWS])):
                for j, (r, i, c) in enumerate(ric_offsets(reference, states[:, :3])):
                    rows.append([source, j, _fmt(r), _fmt(i), _fmt(c)])
            _write_rows(run.path("ric.csv"), ["source", "index", "radial", "intrack", "crosstrack"], rows)
            run.stages.append(stage)
    except Exception as exc:
        log.error("stage %s failed: %s", stage, exc)
        result.manifest = run.manifest("failed", stage, f"{type(exc).__name__}: {exc}")
        if isinstance(exc, ConfigError):
            raise
        raise PipelineError(stage, exc) from exc
    result.manifest = run.manifest("ok")
    return result
