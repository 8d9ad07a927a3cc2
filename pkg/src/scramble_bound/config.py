"""Flat ``key = value`` run configuration."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

from .bound import ELL_OPT, reference_beta
from .errors import ConfigError

MODES = ("simulate", "bound", "continuum", "verify")
ENSEMBLES = ("gue", "free")
ENVIRONMENTS = ("thermal", "pure", "mixed", "custom")
SOURCES = ("system", "spectrum", "triangle")


@dataclass
class RunConfig:
    mode: str
    n_s: int | None = None
    n_e: int | None = None
    beta: float = 1.0
    seed: int = 0
    ensemble: str = "gue"
    environment: str = "thermal"
    env_file: str | None = None
    source: str = "system"
    spectrum_file: str | None = None
    f_beta: float = 1.0
    t_min: float = 0.0
    t_max: float | None = None
    points: int = 2001
    tau1: float | None = None
    tau2: float | None = None
    strip: str = "fixed"
    max_width: float | None = None
    opt_points: int = 11
    ell: float = ELL_OPT
    p_scr: float | None = None
    s2s: float | None = None
    width: float = math.pi
    epsilon: float = 0.1
    d_s: int | None = None
    energy_spacing: float = 0.025
    out: str = "."

    @property
    def strip_interval(self):
        b = reference_beta(self.beta)
        tau1 = -b / 4 if self.tau1 is None else self.tau1
        tau2 = b / 4 if self.tau2 is None else self.tau2
        return tau1, tau2

    @property
    def grid_t_max(self):
        if self.t_max is not None:
            return self.t_max
        if self.mode == "continuum":
            return 10.0 * self.width
        tau1, tau2 = self.strip_interval
        return 10.0 * (tau2 - tau1)


def _float(v):
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("must be finite")
    return x


def _int(v):
    return int(v)


def _choice(options):
    def parse(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v

    return parse


def _text(v):
    if not v:
        raise ValueError("must not be empty")
    return v


PARSERS = {
    "mode": _choice(MODES),
    "n_s": _int,
    "n_e": _int,
    "beta": _float,
    "seed": _int,
    "ensemble": _choice(ENSEMBLES),
    "environment": _choice(ENVIRONMENTS),
    "env_file": _text,
    "source": _choice(SOURCES),
    "spectrum_file": _text,
    "f_beta": _float,
    "t_min": _float,
    "t_max": _float,
    "points": _int,
    "tau1": _float,
    "tau2": _float,
    "strip": _choice(("fixed", "optimize")),
    "max_width": _float,
    "opt_points": _int,
    "ell": _float,
    "p_scr": _float,
    "s2s": _float,
    "width": _float,
    "epsilon": _float,
    "d_s": _int,
    "energy_spacing": _float,
    "out": _text,
}
assert set(PARSERS) == {f.name for f in fields(RunConfig)}

# key -> (predicate, message)
RANGES = {
    "n_s": (lambda v: v >= 1, "must be >= 1"),
    "n_e": (lambda v: v >= 1, "must be >= 1"),
    "beta": (lambda v: v >= 0, "must be >= 0"),
    "f_beta": (lambda v: 0 < v <= 1, "must lie in (0, 1]"),
    "points": (lambda v: v >= 2, "must be >= 2"),
    "opt_points": (lambda v: v >= 2, "must be >= 2"),
    "max_width": (lambda v: v > 0, "must be positive"),
    "ell": (lambda v: v > 0, "must be positive"),
    "p_scr": (lambda v: 0 < v < 1, "must lie in (0, 1)"),
    "s2s": (lambda v: v > 0, "must be positive"),
    "width": (lambda v: v > 0, "must be positive"),
    "epsilon": (lambda v: v > 0, "must be positive"),
    "d_s": (lambda v: v >= 2, "must be >= 2"),
    "energy_spacing": (lambda v: v > 0, "must be positive"),
    "tau1": (lambda v: v <= 0, "must be <= 0"),
    "tau2": (lambda v: v >= 0, "must be >= 0"),
}


def parse_config(text, mode=None):
    """Parse and validate a configuration document.

    Errors carry the offending line number.  Repeated keys keep the last
    value and emit a warning.  ``mode``, when given, overrides the file.
    """
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        try:
            parsed = PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: invalid value {value!r} ({exc})", lineno) from None
        if key in RANGES and not RANGES[key][0](parsed):
            raise ConfigError(f"{key} = {value} out of range: {RANGES[key][1]}", lineno)
        if key in values:
            warnings.warn(f"line {lineno}: duplicate key {key!r}; using the last value")
        values[key] = parsed
        lines[key] = lineno
    if mode is not None:
        if values.get("mode", mode) != mode:
            warnings.warn(f"config mode {values['mode']!r} overridden by {mode!r}")
        values["mode"] = PARSERS["mode"](mode)
    if "mode" not in values:
        raise ConfigError("missing required key 'mode'", None)
    cfg = RunConfig(**values)
    _check_mode(cfg, lines)
    return cfg


def _require(cfg, lines, *keys):
    for key in keys:
        if getattr(cfg, key) is None:
            raise ConfigError(f"mode {cfg.mode!r} requires key {key!r}", lines.get("mode"))


def _check_mode(cfg, lines):
    if cfg.mode in ("simulate", "bound", "verify") and (cfg.mode == "simulate" or cfg.source == "system"):
        _require(cfg, lines, "n_s", "n_e")
    if cfg.mode in ("bound", "verify") and cfg.source == "spectrum":
        _require(cfg, lines, "spectrum_file")
    if cfg.environment == "custom":
        _require(cfg, lines, "env_file")
    if cfg.mode == "bound":
        if (cfg.p_scr is None) == (cfg.s2s is None):
            raise ConfigError("mode 'bound' needs exactly one of p_scr or s2s", lines.get("mode"))
    if cfg.mode == "continuum" and cfg.d_s is None and cfg.n_s is not None:
        cfg.d_s = 2**cfg.n_s
    tau1, tau2 = cfg.strip_interval
    if tau2 - tau1 <= 0:
        raise ConfigError("strip [tau1, tau2] must have positive width", lines.get("tau2"))
    if cfg.t_max is not None and cfg.t_max <= cfg.t_min:
        raise ConfigError("t_max must exceed t_min", lines.get("t_max"))
