"""Run configuration: flat ``key = value`` files, presets, validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .models import FAMILIES, POTENTIALS, SPLITTINGS
from .stepper import DEFAULT_MEMORY_CAP

INITIAL_KINDS = ("flower", "random", "file")


@dataclass(frozen=True)
class RunConfig:
    family: str = "AC"
    epsilon: float = 0.05
    gamma: float = 0.05
    S: float = 0.1
    potential: str = "quartic"
    splitting: str = "stabilized"
    nx: int = 128
    ny: int = 128
    lx: float = 2.0
    ly: float = 2.0
    alpha: float = 1.0
    tau: float = 0.1
    n_steps: int = 300
    initial: str = "flower"
    seed: int = 0
    amplitude: float = 1.0
    initial_path: str = ""
    corner_origin: bool = False
    dealias: bool = False
    output: str = "out"
    energy_stride: int = 1
    snapshot_stride: int = 100
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP
    nonlinear_tol: float = 1e-10
    nonlinear_max_iter: int = 200

    def validate(self) -> "RunConfig":
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(key, f"{msg}, got {getattr(self, key)!r}")

        need(self.family in FAMILIES, "family", f"must be one of {', '.join(FAMILIES)}")
        need(self.potential in POTENTIALS, "potential", f"must be one of {', '.join(POTENTIALS)}")
        need(self.splitting in SPLITTINGS, "splitting", f"must be one of {', '.join(SPLITTINGS)}")
        need(self.epsilon > 0, "epsilon", "must be positive")
        need(self.gamma > 0, "gamma", "must be positive")
        need(self.S >= 0, "S", "must be nonnegative")
        for key in ("nx", "ny"):
            n = getattr(self, key)
            need(n >= 4 and n % 2 == 0, key, "must be an even integer >= 4")
        need(self.lx > 0, "lx", "must be positive")
        need(self.ly > 0, "ly", "must be positive")
        need(0 < self.alpha <= 1, "alpha", "must lie in (0, 1]")
        need(self.tau > 0, "tau", "must be positive")
        need(self.n_steps >= 0, "n_steps", "must be nonnegative")
        need(self.initial in INITIAL_KINDS, "initial", f"must be one of {', '.join(INITIAL_KINDS)}")
        need(0 <= self.seed < 2**64, "seed", "must be an unsigned 64-bit integer")
        need(self.amplitude > 0, "amplitude", "must be positive")
        need(self.initial != "file" or bool(self.initial_path), "initial_path", "is required when initial = file")
        need(self.energy_stride >= 1, "energy_stride", "must be >= 1")
        need(self.snapshot_stride >= 1, "snapshot_stride", "must be >= 1")
        need(self.memory_cap_bytes > 0, "memory_cap_bytes", "must be positive")
        need(0 < self.nonlinear_tol <= 1e-4, "nonlinear_tol", "must lie in (0, 1e-4]")
        need(self.nonlinear_max_iter >= 1, "nonlinear_max_iter", "must be >= 1")
        if self.splitting == "convex_split":
            need(self.family != "MBE_noslope", "splitting", "convex_split is not defined for MBE_noslope")
            need(self.family.startswith("MBE") or self.potential == "quartic", "potential",
                 "convex_split requires the quartic potential")
        return self


PRESETS: dict[str, dict] = {
    "ac-flower": dict(family="AC", epsilon=0.05, gamma=0.05, S=0.1, nx=128, ny=128, lx=2.0, ly=2.0,
                      tau=0.1, n_steps=300, initial="flower", alpha=1.0),
    "ch-random": dict(family="CH", epsilon=0.05, gamma=0.0025, S=0.01, nx=256, ny=256, lx=2.0, ly=2.0,
                      tau=0.001, n_steps=2000, initial="random", amplitude=1.0, alpha=1.0,
                      energy_stride=10, snapshot_stride=500),
    "mbe-random": dict(family="MBE_slope", epsilon=0.1, gamma=0.1, S=0.1, nx=256, ny=256,
                       lx=6.283185307179586, ly=6.283185307179586, tau=0.001, n_steps=2000,
                       initial="random", amplitude=0.001, alpha=1.0, energy_stride=10, snapshot_stride=500),
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw):
    if key not in _TYPES:
        raise ConfigError(key, "unknown configuration key")
    kind = _TYPES[key]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text, 0)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None
    return text


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text())


def build_config(preset: str | None = None, path=None, overrides: dict | None = None) -> RunConfig:
    """Layer defaults <- preset <- config file <- overrides, then validate."""
    values: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values.update(PRESETS[preset])
    if path is not None:
        values.update(load_config(path))
    for key, raw in (overrides or {}).items():
        values[key] = _coerce(key, raw)
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
    return cfg.validate()


def config_items(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)
