"""Study configuration: a flat ``key = value`` text file with dotted keys.

Example::

    mode = bosonic
    seed = 12345
    model.eigenvalues = 1, 2
    interaction.rank1.weights = 1
    interaction.rank1.vectors = 0.7071067811865476 0.7071067811865476
    sweep.temperatures = 2, 5, 10, 20, 40
    mc.samples = 400000
    truncation.eps = 1e-8

Lists are comma separated; several rank-one vectors are separated by ``;``
and their components by whitespace.  Complex components use Python syntax
(``1+0.5j``).  Lines starting with ``#`` are ignored and unknown keys are
rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError

MODES = ("bosonic", "boltzon", "free-check", "measure-check", "onebody")
COUPLING_RULES = ("inverse-temperature", "zero", "fixed")

_KEYS = {
    "mode": str,
    "seed": int,
    "workers": int,
    "model.eigenvalues": "floats",
    "model.nu": float,
    "model.K": int,
    "model.grid.half_width": float,
    "model.grid.points": int,
    "model.grid.exponent_a": float,
    "model.grid.tol": float,
    "interaction.rank1.weights": "floats",
    "interaction.rank1.vectors": "vectors",
    "interaction.kernel.shape": str,
    "interaction.kernel.strength": float,
    "interaction.kernel.width": float,
    "sweep.temperatures": "floats",
    "sweep.particles": "ints",
    "coupling.rule": str,
    "coupling.value": float,
    "coupling.allow_fixed": bool,
    "mc.samples": int,
    "mc.batches": int,
    "mc.moment_orders": "ints",
    "truncation.eps": float,
    "truncation.max_n": int,
    "scf.damping": float,
    "scf.tol": float,
    "scf.max_iter": int,
    "output.dir": str,
    "output.format": str,
    "output.name": str,
}


@dataclass(frozen=True)
class StudyConfig:
    mode: str = "bosonic"
    seed: int = 0
    workers: int = 1
    eigenvalues: Optional[Tuple[float, ...]] = None
    nu: float = 0.0
    K: Optional[int] = None
    grid_half_width: Optional[float] = None
    grid_points: Optional[int] = None
    grid_exponent_a: float = 2.0
    grid_tol: Optional[float] = None
    rank1_weights: Tuple[float, ...] = ()
    rank1_vectors: Tuple[Tuple[complex, ...], ...] = ()
    kernel_shape: Optional[str] = None
    kernel_strength: float = 1.0
    kernel_width: float = 1.0
    temperatures: Tuple[float, ...] = ()
    particles: Tuple[int, ...] = ()
    coupling_rule: str = "inverse-temperature"
    coupling_value: float = 1.0
    allow_fixed_coupling: bool = False
    samples: int = 100_000
    batches: int = 100
    moment_orders: Tuple[int, ...] = (1, 2)
    eps: float = 1e-8
    max_n: int = 5000
    max_dim: int = 2_000_000
    scf_damping: float = 0.5
    scf_tol: float = 1e-10
    scf_max_iter: int = 10_000
    out_dir: str = "."
    out_format: str = "csv"
    out_name: Optional[str] = None
    raw: Tuple[Tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **kw) -> "StudyConfig":
        return replace(self, **kw)

    def echo(self) -> dict:
        """Parsed settings, for the JSON summary."""
        out = {}
        for name in self.__dataclass_fields__:
            if name == "raw":
                continue
            v = getattr(self, name)
            if isinstance(v, tuple):
                v = [list(map(_jsonable, x)) if isinstance(x, tuple) else _jsonable(x) for x in v]
            out[name] = _jsonable(v)
        return out


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def validate(cfg: StudyConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}; expected one of {MODES}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit value")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    t = cfg.temperatures
    if any(x <= 0 for x in t) or any(b <= a for a, b in zip(t, t[1:])):
        raise ConfigError("sweep.temperatures must be positive and strictly increasing")
    if cfg.mode in ("bosonic", "measure-check") and cfg.samples < 1000:
        raise ConfigError("mc.samples must be at least 1000 for measure estimates")
    if cfg.coupling_rule not in COUPLING_RULES:
        raise ConfigError(f"coupling.rule must be one of {COUPLING_RULES}")
    if cfg.mode == "bosonic" and cfg.coupling_rule == "fixed" and not cfg.allow_fixed_coupling:
        raise ConfigError("a fixed bosonic coupling needs coupling.allow_fixed = true")
    if cfg.eps <= 0:
        raise ConfigError("truncation.eps must be positive")
    if cfg.out_format not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    if len(cfg.rank1_weights) != len(cfg.rank1_vectors):
        raise ConfigError("interaction.rank1.weights and .vectors differ in length")
    if cfg.kernel_shape not in (None, "gaussian", "constant"):
        raise ConfigError("interaction.kernel.shape must be gaussian or constant")
    if cfg.eigenvalues is None and cfg.grid_points is None and cfg.mode != "onebody":
        raise ConfigError("model needs eigenvalues or a grid")
    if any(n < 1 for n in cfg.particles):
        raise ConfigError("sweep.particles must be positive")


def _parse_value(key: str, text: str):
    kind = _KEYS[key]
    try:
        if kind == "floats":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if kind == "ints":
            return tuple(int(x) for x in text.split(",") if x.strip())
        if kind == "vectors":
            return tuple(
                tuple(complex(c) for c in vec.split()) for vec in text.split(";") if vec.strip()
            )
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind is int:
            return int(text, 0)
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


_FIELD = {
    "mode": "mode",
    "seed": "seed",
    "workers": "workers",
    "model.eigenvalues": "eigenvalues",
    "model.nu": "nu",
    "model.K": "K",
    "model.grid.half_width": "grid_half_width",
    "model.grid.points": "grid_points",
    "model.grid.exponent_a": "grid_exponent_a",
    "model.grid.tol": "grid_tol",
    "interaction.rank1.weights": "rank1_weights",
    "interaction.rank1.vectors": "rank1_vectors",
    "interaction.kernel.shape": "kernel_shape",
    "interaction.kernel.strength": "kernel_strength",
    "interaction.kernel.width": "kernel_width",
    "sweep.temperatures": "temperatures",
    "sweep.particles": "particles",
    "coupling.rule": "coupling_rule",
    "coupling.value": "coupling_value",
    "coupling.allow_fixed": "allow_fixed_coupling",
    "mc.samples": "samples",
    "mc.batches": "batches",
    "mc.moment_orders": "moment_orders",
    "truncation.eps": "eps",
    "truncation.max_n": "max_n",
    "scf.damping": "scf_damping",
    "scf.tol": "scf_tol",
    "scf.max_iter": "scf_max_iter",
    "output.dir": "out_dir",
    "output.format": "out_format",
    "output.name": "out_name",
}


def parse_config(text: str, **overrides) -> StudyConfig:
    values = {}
    raw = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value)
        raw.append((key, value))
    kwargs = {_FIELD[k]: v for k, v in values.items()}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return StudyConfig(raw=tuple(raw), **kwargs)


def load_config(path, **overrides) -> StudyConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, **overrides)
