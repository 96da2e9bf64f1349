"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 a
validation threshold was exceeded in ``--assert`` mode.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .als import AlsConfig, fit
from .config import (
    ScenarioConfig,
    leo_cartesian_scenario,
    leo_equinoctial_scenario,
    load_config,
    poly_scenario,
    save_config,
    toy_study_scenario,
)
from .errors import ConfigError, FitError, IterationError, ModelFormatError, PropagationError
from .model import TrainingSet, load_model, load_training_csv, save_model, save_training_csv
from .oracles import build_oracle, draw_samples
from .pipeline import PipelineError, run_pipeline, write_histogram_csv, write_validation_csv
from .sobol import sobol_indices, write_sobol_csv
from .statistics import analytic_moments, histogram, sample_surrogate, validation_rms
from .study import convergence_study, write_study_csv, write_study_raw_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_THRESHOLD = 0, 2, 3, 4
DEFAULT_ASSERT_RATIO = 1e-2

log = logging.getLogger("srprop")

PRESETS = {
    "leo-cartesian": leo_cartesian_scenario,
    "leo-equinoctial": leo_equinoctial_scenario,
    "poly": poly_scenario,
    "toy-study": toy_study_scenario,
}


def _scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    prop = cfg.propagation
    if getattr(args, "workers", None):
        prop = replace(prop, workers=args.workers)
    cfg = replace(cfg, propagation=prop)
    if getattr(args, "oracle", None):
        cfg = replace(cfg, oracle=replace(cfg.oracle, kind=args.oracle))
    if getattr(args, "seed", None) is not None:
        s = args.seed
        cfg = replace(cfg, sampling=replace(cfg.sampling, seed_train=s, seed_validate=s + 1, seed_mc=s + 2,
                                            seed_sobol=(s + 3, s + 4), seed_reference=s + 5))
    if getattr(args, "retrograde_factor", None) is not None:
        cfg = replace(cfg, retrograde_factor=args.retrograde_factor)
    return cfg


def cmd_run(args) -> int:
    cfg = _scenario(args)
    out = Path(args.out or cfg.output_dir)
    result = run_pipeline(cfg, out, base_dir=Path(args.config).parent)
    ratio = float(np.max(result.validation.ratio))
    print(f"run complete: {out}  rank={result.report.final_rank}  gamma={result.report.final_gamma:.3e}  "
          f"max validation ratio={ratio:.3e}")
    if args.assert_mode:
        limit = cfg.assert_max_ratio or DEFAULT_ASSERT_RATIO
        if not ratio < limit:
            print(f"validation ratio {ratio:.3e} exceeds {limit:.3e}", file=sys.stderr)
            return EXIT_THRESHOLD
    return EXIT_OK


def cmd_propagate(args) -> int:
    cfg = _scenario(args)
    oracle = build_oracle(cfg, Path(args.config).parent)
    n = args.samples or cfg.sampling.n_train
    seed = cfg.sampling.seed_train if args.seed is None else args.seed
    xi, _, out = draw_samples(cfg, oracle, n, seed)
    save_training_csv(TrainingSet(xi, out, seed), args.out)
    print(f"wrote {n} samples to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    train = load_training_csv(args.train)
    als = AlsConfig(epsilon=args.epsilon, delta=args.delta, max_rank=args.max_rank,
                    max_sweeps_per_rank=args.max_sweeps, ridge_lambda=args.ridge, init_seed=args.init_seed,
                    P=args.P, line_search=args.line_search, restarts=args.restarts)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        model, report = fit(train, als)
    save_model(model, args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    print(f"rank {report.final_rank}, gamma {report.final_gamma:.3e}, {report.termination_reason}")
    return EXIT_OK


def cmd_validate(args) -> int:
    model = load_model(args.model)
    table = validation_rms(model, load_training_csv(args.data))
    names = [f"q_{m + 1}" for m in range(model.M)]
    if args.out:
        write_validation_csv(table, names, args.out)
    for name, r, s, x in zip(names, table.residual_rms, table.sample_rms, table.ratio):
        print(f"{name}: residual RMS {r:.3e}  sample RMS {s:.3e}  ratio {x:.3e}")
    if args.assert_ratio is not None and not np.max(table.ratio) < args.assert_ratio:
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_stats(args) -> int:
    model = load_model(args.model)
    mom = analytic_moments(model)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "moments.csv", "w") as fh:
        fh.write("qoi,mean,std\n")
        for m in range(model.M):
            fh.write(f"q_{m + 1},{float(mom.mean[m])!r},{float(mom.std[m])!r}\n")
    samples = sample_surrogate(model, args.samples, args.seed)
    for m in range(model.M):
        edges, counts = histogram(samples[:, m], args.bins)
        write_histogram_csv(edges, counts, out / f"histogram_q_{m + 1}.csv")
    print(f"wrote moments and {model.M} histograms to {out}")
    return EXIT_OK


def cmd_sobol(args) -> int:
    model = load_model(args.model)
    res = sobol_indices(model, args.samples, tuple(args.seeds))
    write_sobol_csv(res, args.out)
    print(f"wrote {res.indices.shape[0]}x{res.indices.shape[1]} indices to {args.out}")
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = _scenario(args)
    n_list = tuple(args.n_list) if args.n_list else None
    res = convergence_study(cfg, n_list, args.repeats, args.qoi)
    write_study_csv(res, args.out)
    if args.raw:
        write_study_raw_csv(res, args.raw)
    sr, mc = res.medians("sr"), res.medians("mc")
    for n, a, b in zip(res.n_list, sr, mc):
        print(f"N={n}: median STD error SR {a:.3e}  MC {b:.3e}")
    print(f"MC log-log slope {res.loglog_slope('mc'):.3f}")
    return EXIT_OK


def cmd_preset(args) -> int:
    cfg = PRESETS[args.name]()
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    save_config(cfg, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srprop", description="Separated-representation orbit uncertainty propagation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("config", help="scenario TOML file")
        sp.add_argument("--workers", type=int, help="worker processes for propagation")
        sp.add_argument("--oracle", choices=["dynamics", "poly"], help="replace the ground-truth map")
        sp.add_argument("--seed", type=int, help="base seed; stage seeds are derived from it")
        sp.add_argument("--retrograde-factor", type=int, choices=[1, -1], dest="retrograde_factor")

    sp = sub.add_parser("preset", help="write a bundled scenario as a TOML file")
    sp.add_argument("name", choices=sorted(PRESETS))
    sp.add_argument("--out", required=True)
    sp.add_argument("--output-dir", dest="output_dir", help="run directory recorded in the config")
    sp.set_defaults(func=cmd_preset)

    sp = sub.add_parser("run", help="full pipeline")
    scenario_args(sp)
    sp.add_argument("--out", help="run directory (default: output_dir from the config)")
    sp.add_argument("--assert", dest="assert_mode", action="store_true",
                    help="exit 4 if the validation ratio exceeds the configured limit")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("propagate", help="generate a training CSV")
    scenario_args(sp)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_propagate)

    sp = sub.add_parser("fit", help="fit a model to a training CSV")
    sp.add_argument("train")
    sp.add_argument("--out", required=True)
    sp.add_argument("--report")
    d = AlsConfig()
    sp.add_argument("--epsilon", type=float, default=d.epsilon)
    sp.add_argument("--delta", type=float, default=d.delta)
    sp.add_argument("--max-rank", type=int, default=d.max_rank, dest="max_rank")
    sp.add_argument("--max-sweeps", type=int, default=d.max_sweeps_per_rank, dest="max_sweeps")
    sp.add_argument("--ridge", type=float, default=d.ridge_lambda)
    sp.add_argument("--init-seed", type=int, default=d.init_seed, dest="init_seed")
    sp.add_argument("-P", type=int, default=d.P)
    sp.add_argument("--line-search", action="store_true", dest="line_search")
    sp.add_argument("--restarts", type=int, default=d.restarts, help="fresh seeded attempts when a fit ends above epsilon")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("validate", help="residual RMS of a model on held-out data")
    sp.add_argument("model")
    sp.add_argument("data")
    sp.add_argument("--out")
    sp.add_argument("--assert-ratio", type=float, dest="assert_ratio")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("stats", help="analytic moments and surrogate histograms")
    sp.add_argument("model")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bins", type=int)
    sp.add_argument("--out-dir", default=".", dest="out_dir")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("sobol", help="first-order Sobol indices of a model")
    sp.add_argument("model")
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.add_argument("--seeds", type=int, nargs=2, default=[0, 1])
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sobol)

    sp = sub.add_parser("study", help="STD convergence versus training-set size")
    scenario_args(sp)
    sp.add_argument("--n-list", type=int, nargs="+", dest="n_list")
    sp.add_argument("--repeats", type=int)
    sp.add_argument("--qoi", type=int)
    sp.add_argument("--out", required=True)
    sp.add_argument("--raw", help="also write per-repeat errors")
    sp.set_defaults(func=cmd_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ModelFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc.cause, ConfigError) else EXIT_NUMERICAL
    except (FitError, PropagationError, IterationError, FloatingPointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
