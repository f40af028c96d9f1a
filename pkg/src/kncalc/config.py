"""Run configuration: a YAML document of nested blocks (JSON is accepted too).

Example::

    geometry:
      kind: b_interval
      n: 128
      window: 10.0
      scattering_c: 1.0
    symbol:
      name: xi
    cutoff:
      r: null          # default min(r0 / 2, 1)
      profile: smooth
    flow:
      tol: 1.0e-10
    suite:
      checks: all
    tolerances: {}     # check name (or "all") -> tolerance
    suspended:
      z_period: 6.283185307179586
      n_z: 16
    semiclassical:
      t_ladder: [1.0, 0.5, 0.25, 0.125]
    output_dir: kncalc-out
    seed: 0
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .geometry import ModelKind, make_model

__all__ = [
    "ConfigError",
    "GeometryBlock",
    "SymbolBlock",
    "CutoffBlock",
    "FlowBlock",
    "SuiteBlock",
    "SuspendedBlock",
    "SemiclassicalBlock",
    "RunConfig",
    "load_config",
    "parse_config",
    "dump_config",
]


class ConfigError(ValueError):
    """The configuration could not be parsed or failed validation."""


@dataclass(frozen=True)
class GeometryBlock:
    kind: str = "circle"
    n: int = 128
    window: float = 10.0
    scattering_c: float = 1.0

    def build(self):
        return make_model(self.kind, self.n, self.window, self.scattering_c)


@dataclass(frozen=True)
class SymbolBlock:
    name: str = "xi"


@dataclass(frozen=True)
class CutoffBlock:
    r: float | None = None
    profile: str = "smooth"


@dataclass(frozen=True)
class FlowBlock:
    tol: float = 1e-10


@dataclass(frozen=True)
class SuiteBlock:
    checks: Any = "all"


@dataclass(frozen=True)
class SuspendedBlock:
    z_period: float = 2 * math.pi
    n_z: int = 16


@dataclass(frozen=True)
class SemiclassicalBlock:
    t_ladder: tuple = (1.0, 0.5, 0.25, 0.125)


_BLOCKS = {
    "geometry": GeometryBlock,
    "symbol": SymbolBlock,
    "cutoff": CutoffBlock,
    "flow": FlowBlock,
    "suite": SuiteBlock,
    "suspended": SuspendedBlock,
    "semiclassical": SemiclassicalBlock,
}


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    symbol: SymbolBlock = field(default_factory=SymbolBlock)
    cutoff: CutoffBlock = field(default_factory=CutoffBlock)
    flow: FlowBlock = field(default_factory=FlowBlock)
    suite: SuiteBlock = field(default_factory=SuiteBlock)
    tolerances: dict = field(default_factory=dict)
    suspended: SuspendedBlock = field(default_factory=SuspendedBlock)
    semiclassical: SemiclassicalBlock = field(default_factory=SemiclassicalBlock)
    output_dir: str = "kncalc-out"
    seed: int = 0

    def checks(self, registry: list[str]) -> list[str]:
        """Resolve the suite selection against the known check names."""
        sel = self.suite.checks
        if sel == "all":
            return list(registry)
        if sel is None:
            return []
        unknown = [c for c in sel if c not in registry]
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(unknown)}")
        return list(sel)

    def tolerance(self, name: str, default: float) -> float:
        if name in self.tolerances:
            return float(self.tolerances[name])
        return float(self.tolerances.get("all", default))

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update(changes)
        return parse_config(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["semiclassical"]["t_ladder"] = list(self.semiclassical.t_ladder)
        if isinstance(self.suite.checks, tuple):
            data["suite"]["checks"] = list(self.suite.checks)
        return data


def _num(value, name, kind=float, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _block(cls, raw, name) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"block {name!r} must be a mapping")
    extra = sorted(set(map(str, raw)) - {f.name for f in fields(cls)})
    if extra:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(extra)}")
    return raw


def parse_config(data: dict | None) -> RunConfig:
    """Validate a mapping and build a ``RunConfig``; unknown keys are errors."""
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    allowed = {f.name for f in fields(RunConfig)}
    extra = sorted(set(map(str, data)) - allowed)
    if extra:
        raise ConfigError(f"unknown top-level keys: {', '.join(extra)}")
    out: dict[str, Any] = {}

    raw = data.get("geometry")
    if raw is not None:
        raw = _block(GeometryBlock, raw, "geometry")
        g = GeometryBlock()
        kind = raw.get("kind", g.kind)
        try:
            kind = ModelKind.parse(kind).value
        except (ValueError, AttributeError) as exc:
            raise ConfigError(str(exc)) from exc
        out["geometry"] = GeometryBlock(
            kind=kind, n=_num(raw.get("n", g.n), "geometry.n", int),
            window=_num(raw.get("window", g.window), "geometry.window"),
            scattering_c=_num(raw.get("scattering_c", g.scattering_c), "geometry.scattering_c"))
        try:
            out["geometry"].build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    raw = data.get("symbol")
    if raw is not None:
        raw = _block(SymbolBlock, raw, "symbol")
        name = raw.get("name", SymbolBlock.name)
        if not isinstance(name, str):
            raise ConfigError("symbol.name must be a string")
        out["symbol"] = SymbolBlock(name)

    raw = data.get("cutoff")
    if raw is not None:
        raw = _block(CutoffBlock, raw, "cutoff")
        profile = raw.get("profile", "smooth")
        if profile not in ("smooth", "tent", "box"):
            raise ConfigError(f"unknown cutoff profile {profile!r}")
        r = _num(raw.get("r"), "cutoff.r", allow_none=True)
        if r is not None and not r > 0:
            raise ConfigError("cutoff.r must be positive")
        out["cutoff"] = CutoffBlock(r, profile)

    raw = data.get("flow")
    if raw is not None:
        raw = _block(FlowBlock, raw, "flow")
        tol = _num(raw.get("tol", FlowBlock.tol), "flow.tol")
        if not tol > 0:
            raise ConfigError("flow.tol must be positive")
        out["flow"] = FlowBlock(tol)

    raw = data.get("suite")
    if raw is not None:
        raw = _block(SuiteBlock, raw, "suite")
        checks = raw.get("checks", "all")
        if checks is None:
            checks = ()
        elif checks != "all":
            if not isinstance(checks, (list, tuple)) or not all(isinstance(c, str) for c in checks):
                raise ConfigError("suite.checks must be 'all' or a list of check names")
            checks = tuple(checks)
        out["suite"] = SuiteBlock(checks)

    raw = data.get("tolerances")
    if raw is not None:
        if not isinstance(raw, dict):
            raise ConfigError("tolerances must be a mapping of check name to number")
        out["tolerances"] = {str(k): _num(v, f"tolerances.{k}") for k, v in raw.items()}

    raw = data.get("suspended")
    if raw is not None:
        raw = _block(SuspendedBlock, raw, "suspended")
        s = SuspendedBlock()
        zp = _num(raw.get("z_period", s.z_period), "suspended.z_period")
        nz = _num(raw.get("n_z", s.n_z), "suspended.n_z", int)
        if not zp > 0 or nz < 2:
            raise ConfigError("suspended.z_period must be positive and suspended.n_z >= 2")
        out["suspended"] = SuspendedBlock(zp, nz)

    raw = data.get("semiclassical")
    if raw is not None:
        raw = _block(SemiclassicalBlock, raw, "semiclassical")
        ladder = raw.get("t_ladder", list(SemiclassicalBlock.t_ladder))
        if not isinstance(ladder, (list, tuple)) or len(ladder) < 2:
            raise ConfigError("semiclassical.t_ladder must list at least two values")
        ladder = tuple(_num(t, "semiclassical.t_ladder") for t in ladder)
        if not all(0 < t <= 1 for t in ladder):
            raise ConfigError("semiclassical.t_ladder values must lie in (0, 1]")
        out["semiclassical"] = SemiclassicalBlock(ladder)

    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        out["output_dir"] = data["output_dir"]
    if "seed" in data:
        seed = _num(data["seed"], "seed", int)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        out["seed"] = seed
    return RunConfig(**out)


def load_config(path) -> RunConfig:
    """Read a YAML or JSON file (chosen by suffix; YAML otherwise)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data)


def dump_config(cfg: RunConfig, fmt: str = "yaml") -> str:
    data = cfg.to_dict()
    if fmt == "json":
        return json.dumps(data, indent=2, sort_keys=True)
    if fmt == "yaml":
        return yaml.safe_dump(data, sort_keys=True)
    raise ValueError(f"unknown format {fmt!r}")
