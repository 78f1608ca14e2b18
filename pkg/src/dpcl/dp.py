"""Gradient clipping and addressed Gaussian noise injection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError


@dataclass(frozen=True)
class NoiseConfig:
    """Noise scale sigma, L2 clip bound, and the base seed for noise streams."""

    sigma: float = 1.0
    clip_bound: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.clip_bound <= 0:
            raise ConfigError("clip_bound must be positive")


def clip_grad(g, beta) -> np.ndarray:
    """Rescale g to L2 norm at most beta: g * min(1, beta/||g||)."""
    if beta <= 0:
        raise ConfigError("clip bound must be positive")
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise NumericError("gradient contains NaN/Inf")
    norm = np.linalg.norm(g)
    if norm <= beta:
        return g
    return g * (beta / norm)


def noise_rng(seed, address=()) -> np.random.Generator:
    """Seeded generator for one addressed noise stream.

    Streams addressed by distinct (task, step, role, ...) tuples are
    statistically independent and do not depend on evaluation order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(201,) + tuple(address)))


def add_noise(g, cfg: NoiseConfig, address=()) -> np.ndarray:
    """g + i.i.d. N(0, sigma^2 * beta^2) per coordinate, reproducible per address."""
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise NumericError("gradient contains NaN/Inf")
    if cfg.sigma == 0.0:
        return g.copy()
    z = noise_rng(cfg.seed, address).standard_normal(g.shape)
    return g + cfg.sigma * cfg.clip_bound * z
