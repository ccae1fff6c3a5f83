"""Run configuration, stored as JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .ransac import Mode, RansacConfig
from .synth import NoiseModel


@dataclass(frozen=True)
class BenchmarkGrid:
    outlier_fractions: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4)
    angular_sigmas: tuple[float, ...] = (0.0, 0.2)
    seeds: int = 10
    width: int = 640
    height: int = 480
    detect_threshold: float = 0.02
    pose_points: int = 100
    pose_noise_px: float = 0.5
    pose_thresholds: tuple[float, ...] = (5.0, 10.0, 20.0)

    def __post_init__(self):
        for name in ("outlier_fractions", "angular_sigmas", "pose_thresholds"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not self.outlier_fractions or not self.angular_sigmas or self.seeds < 1:
            raise ValueError("benchmark grid needs at least one outlier fraction, sigma and seed")
        if any(not 0 <= f < 1 for f in self.outlier_fractions):
            raise ValueError("outlier fractions must lie in [0, 1)")
        if any(s < 0 for s in self.angular_sigmas):
            raise ValueError("angular sigmas must be nonnegative")
        if self.width < 2 or self.height < 2:
            raise ValueError("image dimensions must be at least 2")


@dataclass(frozen=True)
class RunConfig:
    mode: Mode = Mode.FOUR_DOF
    seed: int = 0
    ransac: RansacConfig = field(default_factory=RansacConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    benchmark: BenchmarkGrid = field(default_factory=BenchmarkGrid)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["benchmark"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["benchmark"].items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "ransac" in kwargs:
            kwargs["ransac"] = RansacConfig(**kwargs["ransac"])
        if "noise" in kwargs:
            kwargs["noise"] = NoiseModel(**kwargs["noise"])
        if "benchmark" in kwargs:
            kwargs["benchmark"] = BenchmarkGrid(**kwargs["benchmark"])
        return cls(**kwargs)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
