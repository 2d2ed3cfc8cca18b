"""Run configuration: YAML schema, validation, and provenance hashing.

Sections map one-to-one onto dataclasses; unknown keys anywhere are
rejected so typos fail loudly. The optional exponent-relation check
(1/a + 3/b = 1, b >= 3) is enforced only when ``hypothesis_regime`` is
requested.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field as dc_field, fields
from pathlib import Path

import yaml

from .cutoffs import SHARP, SMOOTH
from .errors import ConfigError
from .generators import GeneratorSpec
from .grid import TorusGrid
from .solver import ForcingSpec, SolverConfig


def _take(section: str, data: dict, cls) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return data


@dataclass
class GridSection:
    dim: int = 2
    n: int = 64


@dataclass
class FieldSection:
    kind: str = "constant"
    seed: int = 0
    value: float = 1.0
    k: list = dc_field(default_factory=lambda: [1, 0])
    vector: bool = False
    amplitude: float = 1.0
    phase: float = 0.0
    s: float = 1.0 / 3.0
    p: float = 3.0
    sigma: float = 0.0
    band_lo: int = 0
    band_hi: int | None = None
    divergence_free: bool = False
    contrast: float = 0.2
    decay: float = 2.0

    def to_spec(self) -> GeneratorSpec:
        if self.kind == "constant":
            params = {"value": self.value}
        elif self.kind == "single_mode":
            params = {"k": self.k, "vector": self.vector,
                      "amplitude": self.amplitude, "phase": self.phase}
        elif self.kind == "taylor_green":
            params = {"amplitude": self.amplitude}
        elif self.kind == "random_besov":
            params = {"s": self.s, "p": self.p, "sigma": self.sigma,
                      "band_lo": self.band_lo, "band_hi": self.band_hi,
                      "divergence_free": self.divergence_free, "amplitude": self.amplitude}
        elif self.kind == "density_profile":
            params = {"contrast": self.contrast, "decay": self.decay,
                      "band_hi": self.band_hi if self.band_hi is not None else 3}
        else:
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        return GeneratorSpec(self.kind, self.seed, params)


@dataclass
class SolverSection:
    mu: float = 0.0
    t_end: float = 0.0
    dt: float = 1e-3
    dealias: bool = True
    pressure_tol: float = 1e-12
    cfl_limit: float = 0.4
    snapshot_every: int = 1


@dataclass
class ForcingSection:
    kind: str = "none"
    k: list = dc_field(default_factory=lambda: [1, 0])
    amplitude: float = 0.0
    omega: float = 0.0


@dataclass
class AnalysisSection:
    cutoff: str = SMOOTH
    s: float = 1.0 / 3.0
    t: float = 1.0 / 3.0
    a: float = math.inf
    b: float = 3.0
    q_min: int = -1
    q_max: int | None = None
    tail_start: int | None = None   # default q_max - 4, clipped at 0
    lag_max: int = 8
    lag_diagonal: bool = True
    hypothesis_regime: bool = False

    def __post_init__(self):
        if self.cutoff not in (SMOOTH, SHARP):
            raise ConfigError(f"analysis.cutoff must be 'smooth' or 'sharp', got {self.cutoff!r}")

    def validate_exponents(self) -> None:
        inv_a = 0.0 if math.isinf(self.a) else 1.0 / self.a
        if abs(inv_a + 3.0 / self.b - 1.0) > 1e-12 or self.b < 3.0:
            raise ConfigError(
                f"hypothesis regime requires 1/a + 3/b = 1 with b >= 3; got a={self.a}, b={self.b}")

    def q_range(self, grid: TorusGrid) -> list[int]:
        hi = grid.q_max if self.q_max is None else min(self.q_max, grid.q_max)
        return list(range(max(self.q_min, -1), hi + 1))

    def tail_q(self, grid: TorusGrid) -> int:
        return max(0, grid.q_max - 4) if self.tail_start is None else self.tail_start


@dataclass
class RunConfig:
    grid: GridSection = dc_field(default_factory=GridSection)
    rho: FieldSection = dc_field(default_factory=lambda: FieldSection(kind="constant"))
    u: FieldSection = dc_field(default_factory=lambda: FieldSection(kind="taylor_green"))
    solver: SolverSection = dc_field(default_factory=SolverSection)
    forcing: ForcingSection = dc_field(default_factory=ForcingSection)
    analysis: AnalysisSection = dc_field(default_factory=AnalysisSection)

    def torus_grid(self) -> TorusGrid:
        return TorusGrid(self.grid.dim, self.grid.n)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            grid=self.torus_grid(),
            mu=self.solver.mu,
            t_end=self.solver.t_end,
            dt=self.solver.dt,
            dealias=self.solver.dealias,
            pressure_tol=self.solver.pressure_tol,
            cfl_limit=self.solver.cfl_limit,
            snapshot_every=self.solver.snapshot_every,
            forcing=ForcingSpec(self.forcing.kind, tuple(self.forcing.k),
                                self.forcing.amplitude, self.forcing.omega),
        )

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


_SECTIONS = {
    "grid": GridSection,
    "rho": FieldSection,
    "u": FieldSection,
    "solver": SolverSection,
    "forcing": ForcingSection,
    "analysis": AnalysisSection,
}


_SECTION_DEFAULTS = {"u": {"kind": "taylor_green"}}


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = data.get(name, _SECTION_DEFAULTS.get(name, {}))
        if not isinstance(section, dict):
            raise ConfigError(f"section [{name}] must be a mapping")
        section = {k: (math.inf if v == "inf" else v) for k, v in section.items()}
        kwargs[name] = cls(**_take(name, section, cls))
    cfg = RunConfig(**kwargs)
    if cfg.analysis.hypothesis_regime:
        cfg.analysis.validate_exponents()
    return cfg


def load_config(path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data or {})


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` strings on top of a config mapping."""
    out = json.loads(json.dumps(data))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        dotted, raw = item.split("=", 1)
        parts = dotted.split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key {dotted!r} must look like section.key")
        section, key = parts
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from exc
        if isinstance(value, str):
            # YAML 1.1 misses bare scientific notation like 5e-4
            try:
                value = float(value)
            except ValueError:
                pass
        out.setdefault(section, {})[key] = value
    return out
