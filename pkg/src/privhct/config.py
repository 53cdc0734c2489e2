"""Experiment configuration: INI or JSON files, command-line overrides, validation."""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .graph import parse_normalization
from .recommend import METHODS

OUTPUT_ENV = "PRIVHCT_OUTPUT_DIR"
VERSION = f"v{__version__}"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment grid.

    ``K = 0`` picks ``floor(log2 n)``. ``trace_every = 0`` records the chain
    every ``n`` steps. ``output_dir`` never enters the embedded config, so a
    rerun in another directory yields identical files.
    """

    graph: str = ""
    ratings: str = ""
    normalization: str = "max-per-user"
    largest_component: bool = False
    epsilons: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    K: int = 0
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    window_factor: int = 50
    cap_factor: int = 500
    tol: float = 1e-4
    temperature: float = 1.0
    trace_every: int = 0
    ks: list = field(default_factory=lambda: [100])
    folds: int = 5
    methods: list = field(default_factory=lambda: list(METHODS))
    output_dir: str = ""

    def validate(self) -> "ExperimentConfig":
        if not self.epsilons:
            raise ConfigError("at least one epsilon is required")
        if any(not e > 0 for e in self.epsilons):
            raise ConfigError(f"epsilons must be positive, got {self.epsilons}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.K < 0:
            raise ConfigError("K must be >= 0")
        if self.window_factor < 1 or self.cap_factor < 1:
            raise ConfigError("window_factor and cap_factor must be >= 1")
        if not self.temperature > 0:
            raise ConfigError("temperature must be positive")
        if self.trace_every < 0:
            raise ConfigError("trace_every must be >= 0")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError("metric k values must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
        try:
            parse_normalization(self.normalization)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def embedded(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        return d

    def flat(self) -> str:
        """``key=value`` pairs joined by ``; `` with list items comma-joined."""
        parts = []
        for k, v in sorted(self.embedded().items()):
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            parts.append(f"{k}={v}")
        return "; ".join(parts)

    def out(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or "privhct-out")


# INI section for each key; JSON files may be flat or use the same sections
_SECTIONS = {
    "data": ("graph", "ratings", "normalization", "largest_component"),
    "privacy": ("epsilons", "K", "bins"),
    "mcmc": ("seeds", "window_factor", "cap_factor", "tol", "temperature", "trace_every"),
    "recommend": ("ks", "k", "folds", "methods"),
    "output": ("output_dir", "dir"),
}
_ALIASES = {"bins": "K", "k": "ks", "dir": "output_dir", "epsilon": "epsilons", "seed": "seeds"}
_TYPES = {f.name: f for f in fields(ExperimentConfig)}


def _coerce(name: str, value):
    default = ExperimentConfig()
    current = getattr(default, name)
    try:
        if isinstance(current, list):
            items = value if isinstance(value, list) else [x for x in str(value).replace(",", " ").split()]
            elem = float if name == "epsilons" else (str if name == "methods" else int)
            return [elem(x) for x in items]
        if isinstance(current, bool):
            if isinstance(value, bool):
                return value
            s = str(value).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return type(current)(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {value!r}") from None


def _apply(cfg: ExperimentConfig, raw: dict) -> None:
    for key, value in raw.items():
        name = _ALIASES.get(key, key)
        if name not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, name, _coerce(name, value))


def load_config(path) -> ExperimentConfig:
    """Read a JSON or INI experiment file (relative data paths resolve against the file)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    raw: dict = {}
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        data = data.get("config", data)
        for key, value in data.items():
            if isinstance(value, dict) and key in _SECTIONS:
                raw.update(value)
            else:
                raw[key] = value
    else:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                raw[key] = value
    cfg = ExperimentConfig()
    _apply(cfg, raw)
    for name in ("graph", "ratings"):
        p = getattr(cfg, name)
        if p and not Path(p).is_absolute():
            setattr(cfg, name, str(path.parent / p))
    return cfg


def resolve(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """File values, then non-``None`` overrides, then validation."""
    cfg = load_config(path) if path else ExperimentConfig()
    _apply(cfg, {k: v for k, v in (overrides or {}).items() if v is not None})
    # absolute data paths keep the embedded config valid from any directory
    for name in ("graph", "ratings"):
        p = getattr(cfg, name)
        if p:
            setattr(cfg, name, str(Path(p).resolve()))
    return cfg.validate()
