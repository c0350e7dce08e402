"""Pipeline configuration: a flat JSON file of defaults traceable to the
training setup, overridable per-field from CLI flags (flags win)."""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict, fields

from .errors import ConfigError


@dataclass
class PipelineConfig:
    # paths
    artworks: str = ""
    music: str = ""
    manifest: str = ""
    wav_dir: str = ""
    out_dir: str = "."
    # DSP profile
    sample_rate: int = 16000
    n_fft: int = 1024
    hop: int = 160
    n_mels: int = 64
    fmin: float = 0.0
    fmax: float = 8000.0
    # diffusion schedule
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    gamma: float = 5.0
    # training
    lr: float = 2e-5
    warmup_steps: int = 500
    epochs: int = 20
    batch_size: int = 4
    accumulation: int = 4
    seed: int = 0
    # split
    train_fraction: float = 0.8
    val_count: int = 100
    # prompts
    prompt: str = "Music representing the content of this artwork"
    negative_prompt: str = "Low quality"

    def validate(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0,1), got {self.train_fraction}")
        if self.val_count < 0:
            raise ConfigError("val_count must be non-negative")
        if self.batch_size < 1 or self.accumulation < 1 or self.epochs < 1:
            raise ConfigError("epochs, batch_size, and accumulation must be >= 1")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**raw)
    cfg.validate()
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Flag overrides win over file values; None means 'not given'."""
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    cfg.validate()
    return cfg
