"""Diffusion math: linear-beta noise schedule, forward noising, per-timestep
signal-to-noise ratio, capped-SNR loss weighting, the weighted MSE training
objective, and a seeded ancestral sampler.

Conventions: noise-prediction target (the network predicts the injected
standard-normal noise); SNR(t) = alpha_bar_t / (1 - alpha_bar_t); loss
weight min(SNR, gamma) / SNR, so timesteps with SNR above the cap are
down-weighted and everything else keeps weight 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyInputError,
    ScheduleError,
    ShapeError,
    StepsError,
    TimestepError,
)

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 2e-2
DEFAULT_GAMMA = 5.0


@dataclass
class NoiseSchedule:
    betas: np.ndarray
    alpha_bars: np.ndarray
    snr: np.ndarray
    gamma: float

    @property
    def T(self) -> int:
        return len(self.betas)

    def to_json(self) -> str:
        return json.dumps(
            {
                "T": self.T,
                "gamma": self.gamma,
                "betas": self.betas.tolist(),
                "alpha_bars": self.alpha_bars.tolist(),
                "snr": self.snr.tolist(),
            }
        )


def make_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
    gamma: float = DEFAULT_GAMMA,
) -> NoiseSchedule:
    """Linear beta interpolation from beta_start to beta_end over T steps."""
    if T < 2:
        raise ScheduleError(f"T must be >= 2, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ScheduleError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    if gamma <= 0:
        raise ScheduleError(f"gamma must be positive, got {gamma}")
    betas = np.linspace(beta_start, beta_end, T)
    alpha_bars = np.cumprod(1.0 - betas)
    snr = alpha_bars / (1.0 - alpha_bars)
    return NoiseSchedule(betas=betas, alpha_bars=alpha_bars, snr=snr, gamma=gamma)


@dataclass
class NoisyLatent:
    x0: np.ndarray
    eps: np.ndarray
    t: int
    xt: np.ndarray
    pred: np.ndarray | None = field(default=None)  # denoiser output, set by callers


def _check_t(t: int, s: NoiseSchedule):
    if not 0 <= t < s.T:
        raise TimestepError(f"timestep {t} outside [0, {s.T})")


def add_noise(x0, eps, t: int, s: NoiseSchedule) -> NoisyLatent:
    """Forward process: xt = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ShapeError(f"shape mismatch: {x0.shape} vs {eps.shape}")
    _check_t(t, s)
    ab = s.alpha_bars[t]
    xt = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    return NoisyLatent(x0=x0, eps=eps, t=t, xt=xt)


def recover_x0(xt, eps, t: int, s: NoiseSchedule) -> np.ndarray:
    """Invert the forward process given the true noise."""
    _check_t(t, s)
    ab = s.alpha_bars[t]
    return (np.asarray(xt) - np.sqrt(1.0 - ab) * np.asarray(eps)) / np.sqrt(ab)


def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ShapeError("mse_loss of empty arrays")
    return float(np.mean((target - pred) ** 2))


def snr_weight(t: int, s: NoiseSchedule) -> float:
    """min(SNR, gamma) / SNR: 1 at or below the cap, gamma/SNR above it."""
    _check_t(t, s)
    snr = s.snr[t]
    return float(min(snr, s.gamma) / snr)


def weighted_loss(batch: list[NoisyLatent], s: NoiseSchedule) -> float:
    """Batch mean of snr_weight(t) * mse(pred, eps)."""
    if not batch:
        raise EmptyInputError("weighted_loss of empty batch")
    total = 0.0
    for item in batch:
        if item.pred is None:
            raise ShapeError("batch item missing prediction")
        total += snr_weight(item.t, s) * mse_loss(item.pred, item.eps)
    return total / len(batch)


def sample(denoiser, s: NoiseSchedule, shape, steps: int, seed: int) -> np.ndarray:
    """Ancestral sampling down a stride-subsampled timestep ladder.

    denoiser(xt, t) must return a noise prediction of the same shape.
    The final step returns the predicted clean latent. Deterministic
    given seed.
    """
    if not 1 <= steps <= s.T:
        raise StepsError(f"steps {steps} outside [1, {s.T}]")
    rng = np.random.default_rng(seed)
    ladder = np.unique(np.linspace(0, s.T - 1, steps).round().astype(int))[::-1]
    x = rng.standard_normal(shape)
    for k, t in enumerate(ladder):
        ab_t = s.alpha_bars[t]
        eps_hat = np.asarray(denoiser(x, int(t)), dtype=np.float64)
        if eps_hat.shape != x.shape:
            raise ShapeError(f"denoiser returned shape {eps_hat.shape}, expected {x.shape}")
        x0_pred = (x - np.sqrt(1.0 - ab_t) * eps_hat) / np.sqrt(ab_t)
        if k == len(ladder) - 1:
            return x0_pred
        ab_prev = s.alpha_bars[ladder[k + 1]]
        var = (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev)
        var = max(var, 0.0)
        dir_coeff = np.sqrt(max(1.0 - ab_prev - var, 0.0))
        x = (
            np.sqrt(ab_prev) * x0_pred
            + dir_coeff * eps_hat
            + np.sqrt(var) * rng.standard_normal(shape)
        )
    return x
