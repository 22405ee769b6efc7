"""Experiment configuration: strict JSON round-trip with typed sections."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError


def _take(d: dict, section: str, keys: dict) -> dict:
    """Pull typed values out of a section dict, rejecting unknown keys."""
    unknown = set(d) - set(keys)
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")
    out = {}
    for key, (typ, required, default) in keys.items():
        if key in d:
            val = d[key]
            if isinstance(val, bool):   # bool passes isinstance(-, int)
                raise ConfigError(
                    f"{section}.{key} must be {typ.__name__}, got {val!r}")
            if typ is float and isinstance(val, int):
                val = float(val)
            if not isinstance(val, typ):
                raise ConfigError(
                    f"{section}.{key} must be {typ.__name__}, got {val!r}")
            out[key] = val
        elif required:
            raise ConfigError(f"missing required key {section}.{key}")
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class GridConfig:
    n: int
    L: float = 1.0
    pad_factor: float = 1.5

    def validate(self):
        if self.n < 2 or self.n % 2:
            raise ConfigError(f"grid.n must be even and >= 2, got {self.n}")
        if self.L <= 0:
            raise ConfigError(f"grid.L must be positive, got {self.L}")
        if self.pad_factor < 1.5:
            raise ConfigError("grid.pad_factor must be >= 1.5")


@dataclass(frozen=True)
class DataConfig:
    lam: float
    m0: float = 1.0
    E0_t_end: float = 0.5
    E0_dt: float = 0.0125
    amplitude_scale: float = 1.0

    def validate(self):
        if self.lam <= 1:
            raise ConfigError(f"data.lambda must exceed 1, got {self.lam}")
        if self.m0 < 0:
            raise ConfigError("data.m0 must be nonnegative")
        if self.E0_t_end <= 0 or self.E0_dt <= 0:
            raise ConfigError("data.E0_t_end and data.E0_dt must be positive")
        if self.amplitude_scale <= 0:
            raise ConfigError("data.amplitude_scale must be positive")


@dataclass(frozen=True)
class RunConfig:
    dt: float
    t_end: float
    mu: float = 1.0
    sample_every: int = 10
    blowup_guard: float = 1e4

    def validate(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ConfigError("run.dt and run.t_end must be positive")
        if self.mu <= 0:
            raise ConfigError("run.mu must be positive")
        if self.sample_every < 1:
            raise ConfigError("run.sample_every must be >= 1")
        if self.blowup_guard <= 1:
            raise ConfigError("run.blowup_guard must exceed 1")


@dataclass(frozen=True)
class ConeSection:
    theta0: float | None = None

    def validate(self):
        if self.theta0 is not None and not (0 < self.theta0 <= np.pi / 2):
            raise ConfigError("cone.theta0 must lie in (0, pi/2]")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    checkpoint_every: int = 0

    def validate(self):
        if self.checkpoint_every < 0:
            raise ConfigError("output.checkpoint_every must be >= 0")


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridConfig
    data: DataConfig
    run: RunConfig
    cone: ConeSection = field(default_factory=ConeSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "ExperimentConfig":
        for section in (self.grid, self.data, self.run, self.cone, self.output):
            section.validate()
        lamL = self.data.lam * self.grid.L
        if abs(lamL - round(lamL)) > 1e-9:
            raise ConfigError(
                f"data.lambda * grid.L must be integral, got {lamL}")
        if (self.data.lam + 1.0) * self.grid.L > self.grid.n // 2:
            raise ConfigError(
                "shifted support exceeds the band: need "
                f"(lambda+1)*L <= n/2, got {(self.data.lam + 1) * self.grid.L}"
                f" > {self.grid.n // 2}")
        return self

    @property
    def theta0(self) -> float:
        if self.cone.theta0 is not None:
            return self.cone.theta0
        return float(np.arcsin(1.0 / self.data.lam))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["data"]["lambda"] = d["data"].pop("lam")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be an object")
        unknown = set(d) - {"grid", "data", "run", "cone", "output"}
        if unknown:
            raise ConfigError(f"unknown sections: {sorted(unknown)}")
        for req in ("grid", "data", "run"):
            if req not in d:
                raise ConfigError(f"missing required section {req!r}")
        grid = GridConfig(**_take(d["grid"], "grid", {
            "n": (int, True, None),
            "L": (float, False, 1.0),
            "pad_factor": (float, False, 1.5),
        }))
        data_in = dict(d["data"])
        if "lambda" in data_in:
            data_in["lam"] = data_in.pop("lambda")
        data = DataConfig(**_take(data_in, "data", {
            "lam": (float, True, None),
            "m0": (float, False, 1.0),
            "E0_t_end": (float, False, 0.5),
            "E0_dt": (float, False, 0.0125),
            "amplitude_scale": (float, False, 1.0),
        }))
        run = RunConfig(**_take(d["run"], "run", {
            "dt": (float, True, None),
            "t_end": (float, True, None),
            "mu": (float, False, 1.0),
            "sample_every": (int, False, 10),
            "blowup_guard": (float, False, 1e4),
        }))
        cone_in = dict(d.get("cone", {}))
        if cone_in.get("theta0", None) is None:
            cone_in.pop("theta0", None)
            cone = ConeSection(**_take(cone_in, "cone", {}))
        else:
            cone = ConeSection(**_take(cone_in, "cone", {
                "theta0": (float, True, None),
            }))
        output = OutputConfig(**_take(d.get("output", {}), "output", {
            "directory": (str, False, "out"),
            "checkpoint_every": (int, False, 0),
        }))
        return cls(grid, data, run, cone, output).validate()

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        return cls.from_dict(d)


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(fh.read())


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(cfg.to_json())
