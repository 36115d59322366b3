"""Synthetic clustered data: planted centers in the unit cube with Zipf-sized clusters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .metric import Dataset


@dataclass(frozen=True)
class DataGenConfig:
    n: int
    k_true: int = 25
    zipf_alpha: float = 0.0
    sigma: float = 0.1
    dim: int = 3
    seed: int = 0
    zipf_sign: int = 1

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.k_true <= self.n:
            raise UsageError("need 1 <= k_true <= n")
        if self.zipf_alpha < 0:
            raise UsageError("zipf_alpha must be >= 0")
        if self.sigma <= 0:
            raise UsageError("sigma must be positive")
        if self.dim < 1:
            raise UsageError("dim must be positive")
        if self.zipf_sign not in (1, -1):
            raise UsageError("zipf_sign is +1 (weights i**alpha) or -1 (i**-alpha)")


def cluster_probabilities(k: int, alpha: float, sign: int = 1) -> np.ndarray:
    """P(cluster i) proportional to i**(sign*alpha), clusters numbered from 1."""
    logs = sign * alpha * np.log(np.arange(1, k + 1, dtype=np.float64))
    p = np.exp(logs - logs.max())
    return p / p.sum()


@dataclass(frozen=True)
class Generated:
    dataset: Dataset
    centers: np.ndarray
    labels: np.ndarray


def generate_planted(cfg: DataGenConfig) -> Generated:
    rng = np.random.default_rng(cfg.seed)
    centers = rng.random((cfg.k_true, cfg.dim))
    p = cluster_probabilities(cfg.k_true, cfg.zipf_alpha, cfg.zipf_sign)
    labels = rng.choice(cfg.k_true, size=cfg.n, p=p)
    offsets = rng.normal(0.0, cfg.sigma / math.sqrt(cfg.dim), size=(cfg.n, cfg.dim))
    return Generated(Dataset.euclidean(centers[labels] + offsets), centers, labels)


def generate(cfg: DataGenConfig) -> Dataset:
    return generate_planted(cfg).dataset


def mean_offset_factor(dim: int) -> float:
    """E|z| / sigma for z ~ N(0, sigma^2/dim * I_dim)."""
    return math.sqrt(2.0 / dim) * math.exp(math.lgamma((dim + 1) / 2) - math.lgamma(dim / 2))
