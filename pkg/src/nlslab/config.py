"""TOML run descriptions: parsing, validation, and round-trip serialization.

A config file holds only what its command needs; every section is optional
at parse time and commands complain about the ones they require. Values are
normalized into frozen spec dataclasses so that parse(serialize(parse(x)))
reproduces parse(x) exactly.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import Grid, make_grid
from .dynamics import CoupledParams, NLSParams, SolveConfig
from .experiments import ConcatScenario
from .regions import Ball, Complement, Dilation, HalfSpace, Region

__all__ = [
    "ConfigError",
    "GridSpec",
    "FlowSpec",
    "CouplingSpec",
    "SolveSpec",
    "DatumSpec",
    "RegionSpec",
    "SweepSpec",
    "ThresholdSpec",
    "Config",
    "parse_config",
    "load_config",
    "serialize_config",
    "validate_config",
]


class ConfigError(ValueError):
    """Malformed or incomplete run description."""


@dataclass(frozen=True)
class GridSpec:
    d: int = 1
    L: float = 32.0
    N: int = 1024

    def build(self) -> Grid:
        return make_grid(d=self.d, L=self.L, N=self.N)


@dataclass(frozen=True)
class FlowSpec:
    lam: float = -1.0
    sigma: float = 4.0

    def build(self) -> NLSParams:
        return NLSParams(lam=self.lam, sigma=self.sigma)


@dataclass(frozen=True)
class CouplingSpec:
    k11: float = -1.0
    k12: float = -0.5
    k22: float = -1.0
    p: float = 1.0

    def build(self) -> CoupledParams:
        return CoupledParams(k11=self.k11, k12=self.k12, k22=self.k22, p=self.p)


@dataclass(frozen=True)
class SolveSpec:
    dt: float = 1e-3
    T: float = 1.0
    snapshot_stride: int = 1
    gradient_blowup_factor: float = 1e3
    outer_shell_mass_tol: float = 1e-8

    def build(self) -> SolveConfig:
        return SolveConfig(dt=self.dt, T=self.T, snapshot_stride=self.snapshot_stride,
                           gradient_blowup_factor=self.gradient_blowup_factor,
                           outer_shell_mass_tol=self.outer_shell_mass_tol)


@dataclass(frozen=True)
class DatumSpec:
    preset: str = "gaussian"  # gaussian | smoothbump | sum
    amp: float = 1.0
    width: float = 1.0
    center: Optional[tuple] = None
    boost: float = 0.0
    centers: Optional[tuple] = None  # preset "sum" only

    def build(self, grid: Grid):
        from .data import gaussian, smooth_bump
        from .experiments import build_spread_data

        if self.preset == "gaussian":
            return gaussian(grid, amp=self.amp, width=self.width, center=self.center,
                            boost=self.boost)
        if self.preset == "smoothbump":
            return smooth_bump(grid, amp=self.amp, radius=self.width, center=self.center)
        if self.preset == "sum":
            if not self.centers:
                raise ConfigError("preset 'sum' needs a centers list")
            return build_spread_data(grid, list(self.centers), amp=self.amp, width=self.width)
        raise ConfigError(f"unknown datum preset {self.preset!r}")


@dataclass(frozen=True)
class RegionSpec:
    kind: str = "ball"  # ball | halfspace | complement_dilation
    center: Optional[tuple] = None
    radius: float = 1.0
    axis: int = 0
    side: str = "above"
    offset: float = 0.0

    def build(self, d: int, source: Optional[Region] = None) -> Region:
        if self.kind == "ball":
            center = self.center if self.center is not None else (0.0,) * d
            return Ball(tuple(float(c) for c in center), self.radius)
        if self.kind == "halfspace":
            return HalfSpace(self.axis, self.side, self.offset)
        if self.kind == "complement_dilation":
            if source is None:
                raise ConfigError("complement_dilation target needs a source region")
            return Complement(Dilation(source, self.radius))
        raise ConfigError(f"unknown region kind {self.kind!r}")


@dataclass(frozen=True)
class SweepSpec:
    separations: tuple = ()
    boosts: tuple = ()
    gammas: tuple = ()
    eps_target: float = 1e-2
    s: float = 0.0


@dataclass(frozen=True)
class ThresholdSpec:
    bound_m: float = 10.0
    tail_eps: float = 1e-3
    lp_time: float = 0.5
    freq_offsets: tuple = (4.0, 8.0)


@dataclass(frozen=True)
class Config:
    grid: GridSpec = GridSpec()
    params: FlowSpec = FlowSpec()
    coupling: Optional[CouplingSpec] = None
    solve: SolveSpec = SolveSpec()
    initial_u: DatumSpec = DatumSpec()
    initial_v: Optional[DatumSpec] = None
    initial_w: Optional[DatumSpec] = None
    source: Optional[RegionSpec] = None
    target: Optional[RegionSpec] = None
    mode: str = "general"  # disturbance support handling
    sweep: SweepSpec = SweepSpec()
    thresholds: ThresholdSpec = ThresholdSpec()

    def scenario(self) -> ConcatScenario:
        """Concatenation view of this config (hump family from initial_u)."""
        return ConcatScenario(
            d=self.grid.d, L=self.grid.L, N=self.grid.N, lam=self.params.lam,
            sigma=self.params.sigma, dt=self.solve.dt, T=self.solve.T,
            snapshot_stride=self.solve.snapshot_stride,
            preset=self.initial_u.preset if self.initial_u.preset != "sum" else "gaussian",
            amp=self.initial_u.amp, width=self.initial_u.width,
            gradient_blowup_factor=self.solve.gradient_blowup_factor,
        )


_SECTION_TYPES = {
    "grid": ("grid", GridSpec),
    "params": ("params", FlowSpec),
    "coupling": ("coupling", CouplingSpec),
    "solve": ("solve", SolveSpec),
    "initial_u": ("initial_u", DatumSpec),
    "initial_v": ("initial_v", DatumSpec),
    "initial_w": ("initial_w", DatumSpec),
    "source": ("source", RegionSpec),
    "target": ("target", RegionSpec),
    "sweep": ("sweep", SweepSpec),
    "thresholds": ("thresholds", ThresholdSpec),
}

_TUPLE_KEYS = {"center", "centers", "separations", "boosts", "gammas", "freq_offsets"}
_INT_KEYS = {"d", "N", "snapshot_stride", "axis"}
_STR_KEYS = {"preset", "kind", "side"}


def _coerce(section: str, key: str, value):
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"[{section}] {key} must be a string")
        return value
    if key in _TUPLE_KEYS:
        if not isinstance(value, list):
            raise ConfigError(f"[{section}] {key} must be a list")
        if key == "centers":
            return tuple(tuple(float(x) for x in row) for row in value)
        return tuple(float(x) for x in value)
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number")
    return float(value)


def _load_section(name: str, cls, payload: dict):
    allowed = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in payload.items():
        if key not in allowed:
            raise ConfigError(f"[{name}] unknown key {key!r} (allowed: {sorted(allowed)})")
        kwargs[key] = _coerce(name, key, value)
    return cls(**kwargs)


def parse_config(text: str) -> Config:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"not valid TOML: {err}") from err
    kwargs = {}
    for section, payload in doc.items():
        if section == "mode":
            if payload not in ("supported", "general"):
                raise ConfigError(f"mode must be 'supported' or 'general', got {payload!r}")
            kwargs["mode"] = payload
            continue
        if section not in _SECTION_TYPES:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(payload, dict):
            raise ConfigError(f"[{section}] must be a table")
        attr, cls = _SECTION_TYPES[section]
        kwargs[attr] = _load_section(section, cls, payload)
    return Config(**kwargs)


def load_config(path) -> Config:
    return parse_config(Path(path).read_text())


def _toml_value(v) -> str:
    # restricted emitter: the mirror carries no TOML writer and our value
    # domain is just numbers, bare strings, and (nested) number lists
    if isinstance(v, str):
        return '"' + v + '"'
    if isinstance(v, bool):
        raise ConfigError("boolean config values are not used")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {v!r}")


def serialize_config(cfg: Config) -> str:
    lines = [f'mode = "{cfg.mode}"', ""]
    for section, (attr, _) in _SECTION_TYPES.items():
        spec = getattr(cfg, attr)
        if spec is None:
            continue
        lines.append(f"[{section}]")
        for key, value in asdict(spec).items():
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def validate_config(cfg: Config) -> list:
    """Hard errors raise; returns soft diagnostics worth reading.

    Checks that the grid builds, data and regions build on it, every swept
    separation keeps the humps inside the safe box, and the time stepping
    is sane (enough steps to matter, few enough to finish).
    """
    notes = []
    try:
        grid = cfg.grid.build()
    except ValueError as err:
        raise ConfigError(f"[grid] {err}") from err
    try:
        cfg.params.build()
        solve = cfg.solve.build()
    except ValueError as err:
        raise ConfigError(f"[params/solve] {err}") from err
    if cfg.coupling is not None:
        try:
            cfg.coupling.build()
        except ValueError as err:
            raise ConfigError(f"[coupling] {err}") from err
    for name in ("initial_u", "initial_v", "initial_w"):
        spec = getattr(cfg, name)
        if spec is None:
            continue
        try:
            spec.build(grid)
        except (ValueError, ConfigError) as err:
            raise ConfigError(f"[{name}] {err}") from err
    source = None
    if cfg.source is not None:
        source = cfg.source.build(grid.d)
        if isinstance(source, (Complement,)):
            notes.append("source region is a complement; distance checks may refuse it")
    if cfg.target is not None:
        try:
            cfg.target.build(grid.d, source)
        except ConfigError as err:
            raise ConfigError(f"[target] {err}") from err
    if cfg.sweep.separations:
        scenario = cfg.scenario()
        for D in cfg.sweep.separations:
            try:
                scenario.check_separation(grid, D)
            except ValueError as err:
                raise ConfigError(f"[sweep] {err}") from err
        if list(cfg.sweep.separations) != sorted(cfg.sweep.separations):
            raise ConfigError("[sweep] separations must be increasing")
    n_steps = solve.n_steps
    if n_steps > 10_000_000:
        raise ConfigError(f"[solve] {n_steps} steps is past any desk budget")
    if n_steps < 10:
        notes.append(f"only {n_steps} steps over the horizon; curves will be coarse")
    snaps = n_steps // solve.snapshot_stride + 1
    bytes_needed = snaps * grid.N**grid.d * 16
    if bytes_needed > 2 << 30:
        raise ConfigError(
            f"[solve] snapshot storage would need {bytes_needed / 2**30:.1f} GiB; "
            "raise snapshot_stride"
        )
    if bytes_needed > 512 << 20:
        notes.append(f"snapshots will hold {bytes_needed / 2**20:.0f} MiB in memory")
    if not 0.0 <= cfg.sweep.s <= 1.0:
        raise ConfigError("[sweep] regularity s must lie in [0, 1]")
    return notes
