"""Scenario configuration: TOML text with line-aware error messages and dotted overrides.

Grammar (all sections optional except ``coefficients`` and ``grid``)::

    [coefficients]
    T = 1.0
    d = 1.0
    r1 = 1.0                                        # constant
    a1 = { mean = 1.0, harmonics = [[1, 0.0, 0.3]] } # mean + [k, cos, sin] triples
    ...                                             # r2, a2, b1, b2 likewise

    [grid]          L, h, dt, warmup_periods, max_periods, M (orbit samples), record_stride
    [pipeline]      stages = ["check", "orbits", "front", "spectral", "decay", "entire"]
    [entire]        omega1, omega2 (absolute) or omega1_offset, omega2_offset (added to the
                    admissible bound); n_list, t_end (periods), L, snaps_per_period
    [output]        dir, front_t_stride, front_z_stride, snapshot_times
    [tolerances]    decay_rel, deriv_rel, sandwich, front_drift, speed
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .kinetics import COEFF_NAMES, CoefficientSet, PeriodicFn

STAGES = ("check", "orbits", "front", "spectral", "decay", "entire")
PREREQ = {"check": (), "orbits": ("check",), "front": ("orbits",), "spectral": ("front",),
          "decay": ("spectral",), "entire": ("decay",)}

DEFAULT_TOL = {"decay_rel": 0.05, "deriv_rel": 0.02, "sandwich": 5e-4,
               "front_drift": 1e-9, "speed": 1e-7}


@dataclass(frozen=True)
class GridConfig:
    L: float = 150.0
    h: float = 0.05
    dt: float = 1e-3
    warmup_periods: int = 60
    max_periods: int = 400
    M: int = 256
    record_stride: int = 1


@dataclass(frozen=True)
class EntireConfig:
    omega1: Optional[float] = None
    omega2: Optional[float] = None
    omega1_offset: float = -1.0
    omega2_offset: float = -1.0
    n_list: tuple = (2, 4, 6, 8)
    t_end: float = 4.0
    L: float = 60.0
    snaps_per_period: int = 1


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    front_t_stride: int = 0  # 0: about 16 phases per period
    front_z_stride: int = 1
    snapshot_times: tuple = (-2.0, 0.0, 2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    coeffs: CoefficientSet
    grid: GridConfig
    stages: tuple
    entire: EntireConfig
    output: OutputConfig
    tolerances: dict
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)


def _line_of(text: str, section: str, key: Optional[str]) -> Optional[int]:
    """Best-effort line number of ``key`` inside ``[section]``."""
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", s):
            return i
    return None


class _Ctx:
    def __init__(self, text: str, source: str):
        self.text, self.source = text, source

    def fail(self, section: str, key: Optional[str], msg: str):
        line = _line_of(self.text, section, key)
        if line is None and key is not None:  # missing key: point at its section header
            line = _line_of(self.text, section, None)
        where = f"{self.source}:{line}: " if line else f"{self.source}: "
        name = f"{section}.{key}" if key else section
        raise ConfigError(f"{where}field '{name}': {msg}")


def _number(ctx, sec, key, v, kind=float, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(sec, key, f"expected a number, got {v!r}")
    v = kind(v)
    if positive and not v > 0:
        ctx.fail(sec, key, "must be positive")
    return v


def _periodic(ctx, key, v, T) -> PeriodicFn:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return PeriodicFn.constant(float(v), T)
    if not isinstance(v, dict) or "mean" not in v:
        ctx.fail("coefficients", key, "expected a number or {mean = ..., harmonics = [[k, cos, sin], ...]}")
    extra = set(v) - {"mean", "harmonics"}
    if extra:
        ctx.fail("coefficients", key, f"unknown keys {sorted(extra)}")
    trip = v.get("harmonics", [])
    for tr in trip:
        if not (isinstance(tr, list) and len(tr) == 3):
            ctx.fail("coefficients", key, f"harmonic entry {tr!r} is not [k, cos, sin]")
        if not (isinstance(tr[0], int) and tr[0] >= 1):
            ctx.fail("coefficients", key, f"harmonic index {tr[0]!r} must be a positive integer")
    try:
        return PeriodicFn.from_triples(_number(ctx, "coefficients", key, v["mean"]), trip, T)
    except ValueError as exc:
        ctx.fail("coefficients", key, str(exc))


def _set_dotted(d: dict, dotted: str, value: Any):
    parts = dotted.split(".")
    cur = d
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
        if not isinstance(cur, dict):
            raise ConfigError(f"override {dotted!r}: {p} is not a section")
    cur[parts[-1]] = value


def parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, val = item.split("=", 1)
    key, val = key.strip(), val.strip()
    try:
        parsed = tomllib.loads(f"v = {val}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = val
    return key, parsed


def loads(text: str, source: str = "<config>", overrides=()) -> ScenarioConfig:
    ctx = _Ctx(text, source)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    for item in overrides:
        k, v = parse_override(item)
        _set_dotted(raw, k, v)
    known = {"coefficients", "grid", "pipeline", "entire", "output", "tolerances"}
    for sec in raw:
        if sec not in known:
            ctx.fail(sec, None, "unknown section")
    if "coefficients" not in raw:
        ctx.fail("coefficients", None, "missing section")
    cs = raw["coefficients"]
    T = _number(ctx, "coefficients", "T", cs.get("T", 1.0), positive=True)
    d = _number(ctx, "coefficients", "d", cs.get("d", 1.0), positive=True)
    fns = {}
    for name in COEFF_NAMES:
        if name not in cs:
            ctx.fail("coefficients", name, "missing field")
        fns[name] = _periodic(ctx, name, cs[name], T)
    for k in cs:
        if k not in COEFF_NAMES and k not in ("T", "d"):
            ctx.fail("coefficients", k, "unknown field")
    try:
        coeffs = CoefficientSet(T, d, **fns)
    except ValueError as exc:
        ctx.fail("coefficients", None, str(exc))

    if "grid" not in raw:
        ctx.fail("grid", None, "missing section")
    g = raw["grid"]
    gk = {}
    for key, kind in (("L", float), ("h", float), ("dt", float), ("warmup_periods", int),
                      ("max_periods", int), ("M", int), ("record_stride", int)):
        if key in g:
            gk[key] = _number(ctx, "grid", key, g[key], kind, positive=True)
        elif key in ("L", "h", "dt"):
            ctx.fail("grid", key, "missing field")
    for k in g:
        if k not in GridConfig.__dataclass_fields__:
            ctx.fail("grid", k, "unknown field")
    grid = GridConfig(**gk)

    stages = tuple(raw.get("pipeline", {}).get("stages", STAGES))
    for s in stages:
        if s not in STAGES:
            ctx.fail("pipeline", "stages", f"unknown stage {s!r}")
    need = set(stages)
    for s in stages:
        for p in PREREQ[s]:
            if p not in need:
                ctx.fail("pipeline", "stages", f"stage {s!r} requires {p!r}")

    e = raw.get("entire", {})
    ek = {}
    for key in ("omega1", "omega2", "omega1_offset", "omega2_offset", "t_end", "L"):
        if key in e:
            ek[key] = _number(ctx, "entire", key, e[key], positive=key in ("t_end", "L"))
    if "snaps_per_period" in e:
        ek["snaps_per_period"] = _number(ctx, "entire", "snaps_per_period", e["snaps_per_period"], int, True)
    if "n_list" in e:
        nl = e["n_list"]
        if not (isinstance(nl, list) and nl and all(isinstance(n, int) and n >= 0 for n in nl)):
            ctx.fail("entire", "n_list", "expected a list of non-negative integers")
        if nl != sorted(set(nl)):
            ctx.fail("entire", "n_list", "must be strictly increasing")
        ek["n_list"] = tuple(nl)
    for k in e:
        if k not in EntireConfig.__dataclass_fields__:
            ctx.fail("entire", k, "unknown field")
    ent = EntireConfig(**ek)

    o = raw.get("output", {})
    ok = {}
    if "dir" in o:
        ok["dir"] = str(o["dir"])
    for key in ("front_t_stride", "front_z_stride"):
        if key in o:
            ok[key] = _number(ctx, "output", key, o[key], int)
            if ok[key] < 0:
                ctx.fail("output", key, "must be non-negative")
    if "snapshot_times" in o:
        ok["snapshot_times"] = tuple(_number(ctx, "output", "snapshot_times", v) for v in o["snapshot_times"])
    for k in o:
        if k not in OutputConfig.__dataclass_fields__:
            ctx.fail("output", k, "unknown field")
    out = OutputConfig(**ok)

    tol = dict(DEFAULT_TOL)
    for k, v in raw.get("tolerances", {}).items():
        if k not in DEFAULT_TOL:
            ctx.fail("tolerances", k, "unknown tolerance")
        tol[k] = _number(ctx, "tolerances", k, v, positive=True)
    return ScenarioConfig(coeffs, grid, stages, ent, out, tol, source, raw)


def load(path, overrides=()) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return loads(text, str(p), overrides)
