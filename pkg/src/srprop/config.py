"""Scenario configuration stored as TOML.

Every section maps to a frozen dataclass so that a parsed configuration
compares equal to the one it was emitted from.  Optional values are simply
omitted from the file.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .als import AlsConfig
from .astro.atmosphere import default_atmosphere, read_atmosphere_csv
from .astro.forces import EARTH_ROTATION_RATE, ForceModelConfig
from .astro.gravity import MAX_DEGREE, default_stokes, read_stokes_csv
from .astro.units import MU_EARTH_KM3_S2
from .errors import ConfigError

COORDINATE_SYSTEMS = ("cartesian", "equinoctial")
ORACLES = ("dynamics", "poly")
CARTESIAN_QOIS = ("x", "y", "z", "vx", "vy", "vz")
EQUINOCTIAL_QOIS = ("a", "h", "k", "p", "q", "lambda")
_SCALAR_PARAMETERS = ("mu", "C_D", "area_to_mass")


def stokes_key(name: str):
    """``"C20"`` -> ``("C", 2, 0)``; ``None`` if ``name`` is not a Stokes label."""
    if len(name) == 3 and name[0] in "CS" and name[1:].isdigit():
        n, m = int(name[1]), int(name[2])
        if 2 <= n <= MAX_DEGREE and m <= n and not (name[0] == "S" and m == 0):
            return name[0], n, m
    return None


@dataclass(frozen=True)
class RandomParameter:
    """An uncertain force-model parameter appended to the state inputs.

    ``mean`` and ``std`` default to the force model's nominal value and, for
    Stokes coefficients, the tabulated sigma.
    """

    name: str
    mean: float | None = None
    std: float | None = None

    def __post_init__(self):
        if self.name not in _SCALAR_PARAMETERS and stokes_key(self.name) is None:
            raise ConfigError(f"unknown random parameter {self.name!r}; use mu, C_D, area_to_mass or C/S<n><m>")
        if self.std is not None and not self.std >= 0:
            raise ConfigError(f"std of {self.name} must be nonnegative")


@dataclass(frozen=True)
class SamplingConfig:
    n_train: int = 350
    n_validate: int = 70
    n_surrogate_mc: int = 100_000
    n_sobol: int = 100_000
    seed_train: int = 1
    seed_validate: int = 2
    seed_mc: int = 3
    seed_sobol: tuple = (4, 5)
    seed_reference: int = 6
    histogram_bins: int | None = None

    def __post_init__(self):
        for name in ("n_train", "n_validate", "n_surrogate_mc", "n_sobol"):
            if getattr(self, name) < 1:
                raise ConfigError(f"sampling.{name} must be positive")
        object.__setattr__(self, "seed_sobol", tuple(int(s) for s in self.seed_sobol))
        if len(self.seed_sobol) != 2 or self.seed_sobol[0] == self.seed_sobol[1]:
            raise ConfigError("sampling.seed_sobol must be two distinct integers")
        seeds = (self.seed_train, self.seed_validate)
        if seeds[0] == seeds[1]:
            raise ConfigError("training and validation seeds must differ so the holdout is independent")


@dataclass(frozen=True)
class ForcesConfig:
    mu: float = MU_EARTH_KM3_S2
    harmonic_degree: int = 0
    zonal_only: bool = False
    drag_enabled: bool = False
    C_D: float = 2.0
    area_to_mass: float = 0.01
    earth_rotation_rate: float = EARTH_ROTATION_RATE
    stokes_file: str | None = None
    atmosphere_file: str | None = None

    def build(self, base_dir=None) -> ForceModelConfig:
        def resolve(p):
            return Path(p) if base_dir is None or Path(p).is_absolute() else Path(base_dir) / p

        stokes = default_stokes() if self.stokes_file is None else read_stokes_csv(resolve(self.stokes_file))
        atmosphere = default_atmosphere() if self.atmosphere_file is None else read_atmosphere_csv(resolve(self.atmosphere_file))
        return ForceModelConfig(
            mu=self.mu, harmonic_degree=self.harmonic_degree, zonal_only=self.zonal_only, stokes=stokes,
            drag_enabled=self.drag_enabled, C_D=self.C_D, area_to_mass=self.area_to_mass, atmosphere=atmosphere,
            earth_rotation_rate=self.earth_rotation_rate,
        )


@dataclass(frozen=True)
class PropagationConfig:
    span_hours: float = 36.0
    tol: float = 1e-13
    chunk_size: int = 512
    workers: int = 1

    def __post_init__(self):
        if not self.span_hours >= 0:
            raise ConfigError("propagation.span_hours must be nonnegative")
        if not 1e-14 <= self.tol <= 1e-6:
            raise ConfigError("propagation.tol must lie in [1e-14, 1e-6]")
        if self.chunk_size < 1 or self.workers < 1:
            raise ConfigError("propagation.chunk_size and workers must be positive")


@dataclass(frozen=True)
class OracleConfig:
    """Ground-truth map.  ``poly`` swaps orbit propagation for a random
    separable polynomial of the inputs, for smoke tests and studies."""

    kind: str = "dynamics"
    seed: int = 0
    rank: int = 2
    degree: int = 3
    outputs: int = 2
    spread: float = 1.0
    active: int | None = None

    def __post_init__(self):
        if self.active is not None and self.active < 1:
            raise ConfigError("oracle.active must be positive")
        if not self.spread >= 0:
            raise ConfigError("oracle.spread must be nonnegative")
        if self.kind not in ORACLES:
            raise ConfigError(f"oracle.kind must be one of {ORACLES}")
        if self.rank < 1 or self.degree < 0 or self.outputs < 1:
            raise ConfigError("oracle rank/outputs must be positive and degree nonnegative")


@dataclass(frozen=True)
class StudyConfig:
    n_list: tuple = (100, 200, 400)
    repeats: int = 20
    qoi: int = 0
    n_reference: int = 1_000_000
    seed: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if not self.n_list or min(self.n_list) < 2:
            raise ConfigError("study.n_list needs sample counts of at least 2")
        if self.repeats < 2:
            raise ConfigError("study.repeats must be at least 2")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one pipeline run.

    ``state_mean`` and ``state_std`` are in km and m/s for Cartesian states and
    km / dimensionless / rad for equinoctial ones.  A full ``state_covariance``
    (same units, squared) takes precedence over ``state_std``.
    """

    name: str = "scenario"
    coordinate_system: str = "cartesian"
    state_mean: tuple = ()
    state_std: tuple | None = None
    state_covariance: tuple | None = None
    retrograde_factor: int | None = None
    random_parameters: tuple = ()
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    als: AlsConfig = field(default_factory=AlsConfig)
    forces: ForcesConfig = field(default_factory=ForcesConfig)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    output_dir: str = "run"
    assert_max_ratio: float | None = None

    def __post_init__(self):
        if self.coordinate_system not in COORDINATE_SYSTEMS:
            raise ConfigError(f"coordinate_system must be one of {COORDINATE_SYSTEMS}")
        mean = tuple(float(v) for v in self.state_mean)
        object.__setattr__(self, "state_mean", mean)
        n = len(mean)
        if n == 0:
            raise ConfigError("state_mean is empty")
        if self.oracle.kind == "dynamics" and n != 6:
            raise ConfigError("orbit scenarios need a 6-element state_mean")
        if self.state_std is None and self.state_covariance is None:
            raise ConfigError("give state_std or state_covariance")
        if self.state_std is not None:
            std = tuple(float(v) for v in self.state_std)
            if len(std) != n or any(not s >= 0 for s in std):
                raise ConfigError("state_std must match state_mean and be nonnegative")
            object.__setattr__(self, "state_std", std)
        if self.state_covariance is not None:
            cov = tuple(tuple(float(v) for v in row) for row in self.state_covariance)
            if len(cov) != n or any(len(row) != n for row in cov):
                raise ConfigError("state_covariance must be square and match state_mean")
            object.__setattr__(self, "state_covariance", cov)
        if self.retrograde_factor not in (None, 1, -1):
            raise ConfigError("retrograde_factor must be 1 or -1")
        params = tuple(p if isinstance(p, RandomParameter) else RandomParameter(**p) for p in self.random_parameters)
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ConfigError("random parameters must be unique")
        if params and self.oracle.kind == "dynamics":
            for p in params:
                key = stokes_key(p.name)
                if key is not None and key[1] > self.forces.harmonic_degree:
                    raise ConfigError(f"{p.name} exceeds forces.harmonic_degree = {self.forces.harmonic_degree}")
                if p.name in ("C_D", "area_to_mass") and not self.forces.drag_enabled:
                    raise ConfigError(f"{p.name} is random but drag is disabled")
        object.__setattr__(self, "random_parameters", params)
        if self.assert_max_ratio is not None and not self.assert_max_ratio > 0:
            raise ConfigError("assert_max_ratio must be positive")

    @property
    def d(self) -> int:
        return len(self.state_mean) + len(self.random_parameters)

    @property
    def M(self) -> int:
        return self.oracle.outputs if self.oracle.kind == "poly" else 6

    def input_names(self):
        if self.oracle.kind == "poly":
            base = [f"x{i + 1}" for i in range(len(self.state_mean))]
        else:
            base = list(CARTESIAN_QOIS if self.coordinate_system == "cartesian" else EQUINOCTIAL_QOIS)
        return base + [p.name for p in self.random_parameters]

    def qoi_names(self):
        if self.oracle.kind == "poly":
            return [f"y{m + 1}" for m in range(self.M)]
        return list(CARTESIAN_QOIS if self.coordinate_system == "cartesian" else EQUINOCTIAL_QOIS)

    def state_covariance_matrix(self) -> np.ndarray:
        if self.state_covariance is not None:
            return np.array(self.state_covariance)
        return np.diag(np.square(self.state_std))


# --------------------------------------------------------------------------
# TOML round trip
# --------------------------------------------------------------------------

_SECTIONS = {
    "sampling": SamplingConfig,
    "als": AlsConfig,
    "forces": ForcesConfig,
    "propagation": PropagationConfig,
    "oracle": OracleConfig,
    "study": StudyConfig,
}


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def _section_dict(obj) -> dict:
    return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj) if getattr(obj, f.name) is not None}


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name in _SECTIONS:
            doc[f.name] = _section_dict(value)
        elif f.name == "random_parameters":
            if value:
                doc["random_parameters"] = [_section_dict(p) for p in value]
        else:
            doc[f.name] = _plain(value)
    return doc


def _build(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"[{where}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {', '.join(sorted(unknown))}")
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    try:
        return cls(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a table")
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    values = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            values[key] = _build(_SECTIONS[key], value, key)
        elif key == "random_parameters":
            values[key] = tuple(_build(RandomParameter, p, "random_parameters") for p in value)
        elif isinstance(value, list):
            values[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        else:
            values[key] = value
    try:
        return ScenarioConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def loads(text: str) -> ScenarioConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    return config_from_dict(doc)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return loads(text)


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps(cfg))


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------


def leo_cartesian_scenario(**changes) -> ScenarioConfig:
    """LEO state with 1 km / 1 m/s uncertainties, degree-4 gravity, 36 h."""
    base = ScenarioConfig(
        name="leo-cartesian",
        coordinate_system="cartesian",
        state_mean=(757.700, 5222.607, 4851.800, 2213.210, 4678.340, -5371.300),
        state_std=(1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
        sampling=SamplingConfig(n_train=350, n_validate=70),
        als=AlsConfig(max_rank=5, P=4),
        forces=ForcesConfig(harmonic_degree=4),
    )
    return replace(base, **changes)


def leo_equinoctial_scenario(**changes) -> ScenarioConfig:
    """Near-circular equatorial orbit in equinoctial elements, two-body + J2, 36 h."""
    base = ScenarioConfig(
        name="leo-equinoctial",
        coordinate_system="equinoctial",
        state_mean=(6980.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        state_std=(20.0, 1e-3, 1e-3, 1e-3, 1e-3, 1e-2 * math.pi / 180.0),
        sampling=SamplingConfig(n_train=200, n_validate=40, n_sobol=1_000_000),
        als=AlsConfig(max_rank=6, P=4, delta=1e-6),
        forces=ForcesConfig(harmonic_degree=2, zonal_only=True),
    )
    return replace(base, **changes)


def poly_scenario(d: int = 2, **changes) -> ScenarioConfig:
    """Small polynomial-oracle scenario for smoke tests."""
    base = ScenarioConfig(
        name="poly",
        state_mean=(0.0,) * d,
        state_std=(1.0,) * d,
        sampling=SamplingConfig(n_train=200, n_validate=50, n_surrogate_mc=20_000, n_sobol=20_000),
        als=AlsConfig(max_rank=4, P=4, epsilon=1e-10, delta=1e-12),
        oracle=OracleConfig(kind="poly"),
        study=StudyConfig(n_list=(100, 200, 400), repeats=5, n_reference=200_000),
    )
    return replace(base, **changes)


def toy_study_scenario(**changes) -> ScenarioConfig:
    """Convergence-study scenario on a rank-2 separable polynomial in 16 inputs.

    Each term depends on its own 8 inputs and maps to an orthogonal output
    direction.  A rank-2 fit has 132 unknowns, so 100 samples rarely pin it
    down while 400 samples almost always do.
    """
    base = poly_scenario(
        d=16,
        name="toy-study",
        sampling=SamplingConfig(n_train=400, n_validate=100, n_surrogate_mc=100_000, n_sobol=20_000),
        als=AlsConfig(max_rank=2, P=4, epsilon=1e-10, delta=1e-12, max_sweeps_per_rank=300, line_search=True),
        oracle=OracleConfig(kind="poly", rank=2, degree=3, outputs=2, spread=0.25, active=8),
        study=StudyConfig(n_list=(100, 200, 400, 800, 1600), repeats=40, qoi=0, n_reference=1_000_000, seed=1000),
    )
    return replace(base, **changes)
