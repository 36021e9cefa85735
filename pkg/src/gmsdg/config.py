"""Flat ``section.key = value`` experiment configuration."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .spectral import METHODS, SNAPSHOT_MASSES

DEFAULT_L_ADD = (0, 2, 4, 6, 8, 10)
DEFAULT_SCALINGS = (40.0, 70.0, 100.0, 150.0, 200.0, 300.0, 400.0)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _l_small(text: str):
    return "auto" if text.strip() == "auto" else int(text)


# config key -> (dataclass field, parser)
_KEYS = {
    "mesh.M": ("M", int),
    "mesh.m": ("m", int),
    "coefficient.raster": ("raster", str),
    "coefficient.generator": ("generator", str),
    "coefficient.eta": ("eta", _floats),
    "coefficient.seed": ("seed", int),
    "coefficient.n_channels": ("n_channels", int),
    "coefficient.channel_gaps": ("channel_gaps", _bool),
    "coefficient.inclusion_prob": ("inclusion_prob", float),
    "solver.method": ("method", str),
    "solver.delta": ("delta", float),
    "solver.l_add": ("l_add", _ints),
    "solver.l_small": ("l_small", _l_small),
    "solver.snapshot_mass": ("snapshot_mass", str),
    "solver.threads": ("threads", int),
    "sweep.scalings": ("scalings", _floats),
    "sweep.l_add": ("sweep_l_add", _ints),
    "output.dir": ("out_dir", str),
}

# fields that do not change any computed number
_NOT_HASHED = ("out_dir", "threads")


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 10
    m: int = 10
    raster: str | None = None
    generator: str = "channels_inclusions"
    eta: tuple[float, ...] = (1e4, 1e6)
    seed: int = 0
    n_channels: int | None = None
    channel_gaps: bool = False
    inclusion_prob: float = 0.6
    method: str = "I"
    delta: float = 4.0
    l_add: tuple[int, ...] = DEFAULT_L_ADD
    l_small: int | str = "auto"
    snapshot_mass: str = "mdelta"
    threads: int = 1
    scalings: tuple[float, ...] = DEFAULT_SCALINGS
    sweep_l_add: tuple[int, ...] = tuple(range(11))
    out_dir: str = "out"

    def __post_init__(self):
        errs = []
        if self.M < 1 or self.m < 1:
            errs.append("mesh.M and mesh.m must be >= 1")
        if self.generator not in ("channels_inclusions", "constant"):
            errs.append(f"unknown coefficient.generator {self.generator!r}")
        if not self.eta or any(e < 1 for e in self.eta):
            errs.append("coefficient.eta values must be >= 1")
        if self.method not in METHODS:
            errs.append(f"solver.method must be one of {METHODS}")
        if self.snapshot_mass not in SNAPSHOT_MASSES:
            errs.append(f"solver.snapshot_mass must be one of {SNAPSHOT_MASSES}")
        if self.delta <= 0:
            errs.append("solver.delta must be positive")
        if not self.l_add or any(k < 0 for k in self.l_add):
            errs.append("solver.l_add must be a nonempty list of nonnegative integers")
        if any(k < 0 for k in self.sweep_l_add):
            errs.append("sweep.l_add must be nonnegative")
        if self.l_small != "auto" and (not isinstance(self.l_small, int) or self.l_small < 1):
            errs.append("solver.l_small must be 'auto' or a positive integer")
        if any(s <= 0 for s in self.scalings):
            errs.append("sweep.scalings must be positive")
        if self.threads < 1:
            errs.append("solver.threads must be >= 1")
        if not 0 <= self.inclusion_prob <= 1:
            errs.append("coefficient.inclusion_prob must lie in [0, 1]")
        if errs:
            raise ValueError("invalid configuration: " + "; ".join(errs))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def canonical(self) -> dict:
        d = asdict(self)
        for k in _NOT_HASHED:
            d.pop(k)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_text(self) -> str:
        lines = []
        for key, (name, _) in _KEYS.items():
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``section.key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        name, parse = _KEYS[key]
        if name in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[name] = parse(value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def apply_settings(config: ExperimentConfig, settings) -> ExperimentConfig:
    """Override fields from ``"section.key=value"`` strings (same keys as the file)."""
    values = {}
    for item in settings:
        key, sep, value = (s.strip() for s in item.partition("="))
        if not sep or key not in _KEYS:
            raise ValueError(f"bad setting {item!r}; expected one of {', '.join(_KEYS)} as key=value")
        name, parse = _KEYS[key]
        values[name] = parse(value)
    return replace(config, **values)


CONFIG_KEYS = tuple(_KEYS)
FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))
