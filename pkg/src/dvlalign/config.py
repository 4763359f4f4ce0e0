"""Experiment configuration shared by the bench harness and the CLI.

A config is a flat JSON object; every key is optional and falls back to the
desk preset below. ``imu_grade`` selects a row of the sensor table
(``ideal``, ``navigation``, ``tactical``) and ``imu`` overrides individual
fields of it; ``custom`` starts from an error-free IMU and takes every error
term from ``imu``.
"""
import json
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from . import so3, trajgen
from .dvl import DvlSpec
from .imu import IMU_GRADES, ImuSpec, imu_grade

SVD_WINDOWS = (5.0, 25.0, 50.0, 75.0, 100.0)
FINE_WINDOWS = (5.0, 10.0, 15.0, 20.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0)


@dataclass
class ExperimentConfig:
    trajectory: str = "turn"
    duration_s: float = 200.0
    speed_mps: float = 2.0
    imu_rate_hz: float = 100.0
    dvl: dict = field(default_factory=dict)
    imu_grade: str = "tactical"
    imu: dict = field(default_factory=dict)
    alignment_mode: str = "grid"
    levels: int = 5
    n_random: int = 125
    range_deg: float = 5.0
    windows: tuple = SVD_WINDOWS
    methods: tuple = ("svd",)
    trials: int = 20
    seed: int = 0
    output_dir: str = None
    # network / dataset
    window_len: int = 125
    window_stride: int = 1
    shared_ins: bool = True
    fractions: tuple = (0.6, 0.2, 0.2)
    model: dict = field(default_factory=lambda: {
        "stem_filters": 32, "stage_channels": [32, 64, 96, 128],
        "blocks_per_stage": [1, 1, 1, 1]})
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 6
    patience: int = 3
    max_steps: int = None
    standardize: bool = False
    models: dict = field(default_factory=dict)

    def __post_init__(self):
        self.windows = tuple(float(w) for w in self.windows)
        self.methods = tuple(self.methods)
        self.fractions = tuple(self.fractions)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(w <= 0 or w > self.duration_s for w in self.windows):
            raise ValueError("windows must lie within the trajectory duration")
        if self.imu_grade not in IMU_GRADES and self.imu_grade != "custom":
            raise ValueError(f"unknown imu grade {self.imu_grade!r}")
        if self.trajectory not in trajgen.PRESETS:
            raise ValueError(f"unknown trajectory {self.trajectory!r}")
        if self.alignment_mode not in ("grid", "random"):
            raise ValueError("alignment_mode must be 'grid' or 'random'")

    # -- construction -------------------------------------------------------
    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes):
        d = self.to_dict()
        d.update({k: v for k, v in changes.items() if v is not None})
        return type(self).from_dict(d)

    def to_dict(self):
        d = asdict(self)
        for k in ("windows", "methods", "fractions"):
            d[k] = list(d[k])
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    # -- resolved objects ---------------------------------------------------
    def trajectory_obj(self):
        return trajgen.preset(self.trajectory, self.duration_s, self.speed_mps,
                              self.imu_rate_hz)

    def dvl_spec(self):
        return DvlSpec(**self.dvl)

    def imu_spec(self):
        base = "ideal" if self.imu_grade == "custom" else self.imu_grade
        return imu_grade(base, rate_hz=self.imu_rate_hz, **self.imu)

    def alignments(self, rng=None):
        """Alignment configurations in radians."""
        if self.alignment_mode == "grid":
            return so3.grid_alignments(self.levels, self.range_deg)
        rng = rng if rng is not None else np.random.default_rng(self.seed)
        return np.array([so3.sample_alignment(self.range_deg, rng)
                         for _ in range(self.n_random)])

    def model_config(self):
        from .nn.network import ModelConfig
        return ModelConfig(**self.model)

    def train_config(self):
        from .nn.training import TrainConfig
        return TrainConfig(lr=self.lr, batch_size=self.batch_size,
                           max_epochs=self.max_epochs, max_steps=self.max_steps,
                           patience=self.patience, standardize=self.standardize)


def desk_preset(**changes):
    """Turn trajectory, tactical IMU, 5^3 grid, W = 125, reduced network."""
    return ExperimentConfig().replace(**changes)


def full_preset(**changes):
    """Full-scale settings: 17^3 grid, ResNet-18 widths and the published lr."""
    base = ExperimentConfig(levels=17, lr=1e-7, max_epochs=100, patience=10,
                            model={"stem_filters": 64,
                                   "stage_channels": [64, 128, 256, 512],
                                   "blocks_per_stage": [2, 2, 2, 2]})
    return base.replace(**changes)


def imu_spec_dict(spec):
    return asdict(spec) if isinstance(spec, ImuSpec) else dict(spec)
