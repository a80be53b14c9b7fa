"""Run configuration: a flat ``key = value`` file, overridable from the command line."""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

from .delone import DeloneError, EuclideanBox


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int = 1
    box: str = "0,12000"
    tau: float = 1.0
    eta: float = 0.8                 # required covering radius of the perturbed set
    sigma: float = 2.5
    epsilon: float = 0.2
    rho: float | None = None         # band half-width; default half the volume budget
    order: str = "ascending"         # candidate scan order: ascending | random
    frozen: int = 10                 # size of the frozen set A
    lambda0: float = 1.25
    depth: int = 2
    omega_radius: int = 200          # omega_i is measured within this hop radius of p
    graph_r_max: int = 5
    analyze_radii: str = "0,1,2"
    seed: int = 20240611
    out: str = "out"

    def box_obj(self) -> EuclideanBox:
        try:
            return EuclideanBox.parse(self.box, self.dim)
        except (DeloneError, ValueError) as exc:
            raise ConfigError(f"box: {exc}") from None

    def radii(self) -> list[int]:
        return [int(v) for v in self.analyze_radii.split(",") if v.strip()]

    def validate(self) -> "RunConfig":
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        self.box_obj()
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not self.eta > 0:
            raise ConfigError("eta must be positive")
        if self.sigma < 3 * self.eta:
            raise ConfigError(f"sigma={self.sigma} must be at least 3*eta={3 * self.eta}")
        if not 0 < self.epsilon < self.tau / 2:
            raise ConfigError("epsilon must lie in (0, tau/2)")
        if self.rho is not None and not self.rho > 0:
            raise ConfigError("rho must be positive")
        if not 1 < self.lambda0 < math.sqrt(2):
            raise ConfigError("lambda0 must lie in (1, sqrt 2)")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.order not in ("ascending", "random"):
            raise ConfigError("order must be 'ascending' or 'random'")
        if self.frozen < 0 or self.omega_radius < 0 or self.graph_r_max < 0:
            raise ConfigError("frozen, omega_radius and graph_r_max must be non-negative")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            self.radii()
        except ValueError:
            raise ConfigError("analyze_radii must be comma-separated integers") from None
        return self

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return None if raw.lower() in ("", "none", "auto") else float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for key, raw in cp["run"].items():
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _convert(key, raw)
    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = _convert(key, str(v)) if isinstance(v, str) else v
    return RunConfig(**values).validate()


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read a config file (the shipped default when ``path`` is None)."""
    text = default_config_text() if path is None else Path(path).read_text()
    return parse_config(text, overrides)


def default_config_text() -> str:
    return resources.files("repnet").joinpath("data/default.cfg").read_text()
