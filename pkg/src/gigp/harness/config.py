"""Experiment configuration read from flat ``key = value`` files."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

GROUPS = ("SO2", "SO3")
POOLINGS = ("mean", "gigp", "coords")  # "coords" is the non-invariant negative control
TASKS = ("rot_digits", "synth_invariant", "xyz_regression")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    task: str = "synth_invariant"
    group: str = "SO2"
    pooling: str = "gigp"
    channels: int = 32
    blocks: int = 2
    nbhd: int = 16
    mc_fraction: float = 1.0
    kernel_hidden: tuple[int, ...] = (16, 16)
    orbit_weight: float = 1.0
    anchors: int = 8
    sigma: float | None = None
    phi_hidden: tuple[int, ...] = (32,)
    head_hidden: tuple[int, ...] = ()
    learn_anchors: bool = False
    lr: float = 0.003
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    n_train: int = 2000
    n_val: int = 250
    n_test: int = 500
    n_points: int = 24
    data_seed: int | None = None
    idx_images: str = ""
    idx_labels: str = ""
    threshold: float = 0.5
    max_points: int = 64
    xyz_dir: str = ""
    log_wall_time: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.group not in GROUPS:
            raise ConfigError(f"group must be one of {GROUPS}, got {self.group!r}")
        if self.pooling not in POOLINGS:
            raise ConfigError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        for name in ("channels", "blocks", "nbhd", "anchors", "batch_size", "epochs", "n_train",
                     "n_val", "n_test", "n_points", "max_points"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.lr >= 0:
            raise ConfigError("lr must be nonnegative")
        if not 0.0 < self.mc_fraction <= 1.0:
            raise ConfigError("mc_fraction must lie in (0, 1]")
        if self.mc_fraction * self.nbhd < 1:
            raise ConfigError("mc_fraction * nbhd must be >= 1")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if not self.kernel_hidden:
            raise ConfigError("kernel_hidden needs at least one width")

    @property
    def dim(self) -> int:
        return 2 if self.group == "SO2" else 3

    @property
    def effective_data_seed(self) -> int:
        return self.seed if self.data_seed is None else self.data_seed

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _convert(name: str, typ, raw: str):
    raw = raw.strip()
    t = str(typ)
    try:
        if t.startswith("tuple"):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if t == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if "None" in t:
            if raw.lower() in ("", "none", "auto"):
                return None
            return int(raw) if t.startswith("int") else float(raw)
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, known[key], raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)
