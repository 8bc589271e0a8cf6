"""Synthetic sparse-GLM data: Toeplitz-correlated features, SNR-scaled noise.

Features are zero-mean Gaussian with covariance Sigma_ij = rho_cor^|i-j|,
the true coefficient vector has floor(rho_true * size) entries drawn from
{-1, +1}, and the noise level is set from the requested signal-to-noise
ratio using the realized design.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import LG, LR, MC, TaskKind


@dataclass(frozen=True)
class SynthSpec:
    n: int
    p: int
    rho_true: float
    rho_cor: float
    snr: float
    task: TaskKind

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0.0 < self.rho_true < 1.0:
            raise ValueError("rho_true must lie in (0, 1)")
        if not 0.0 <= self.rho_cor < 1.0:
            raise ValueError("rho_cor must lie in [0, 1)")
        if self.snr <= 0.0:
            raise ValueError("snr must be positive")
        if self.task.name not in (LR, LG, MC):
            raise ValueError(f"synthetic generation supports LR/LG/MC, got {self.task.name}")
        if self.coef_nnz < 1:
            raise ValueError("rho_true too small: the true model would have no nonzeros")

    @property
    def coef_size(self) -> int:
        return self.task.param_count(self.p)

    @property
    def coef_nnz(self) -> int:
        return int(np.floor(self.rho_true * self.coef_size))


@dataclass(frozen=True)
class GroundTruth:
    w_true: np.ndarray  # flat, row-major for MC
    support: np.ndarray  # sorted indices of nonzeros


def gen_design(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows from N(0, Sigma) with Sigma_ij = rho_cor^|i-j|.

    Uses the AR(1) form of the Toeplitz Cholesky factor: column j is
    rho*col(j-1) + sqrt(1-rho^2)*fresh noise, which is O(n*p).
    """
    g = rng.standard_normal((spec.n, spec.p))
    if spec.rho_cor == 0.0:
        return g
    X = np.empty_like(g)
    X[:, 0] = g[:, 0]
    scale = np.sqrt(1.0 - spec.rho_cor**2)
    for j in range(1, spec.p):
        X[:, j] = spec.rho_cor * X[:, j - 1] + scale * g[:, j]
    return X


def gen_wtrue(spec: SynthSpec, rng: np.random.Generator) -> GroundTruth:
    """Pick a uniform random support and fill it with +-1 signs."""
    size = spec.coef_size
    m = spec.coef_nnz
    support = np.sort(rng.choice(size, size=m, replace=False))
    w = np.zeros(size)
    w[support] = rng.integers(0, 2, size=m) * 2.0 - 1.0
    return GroundTruth(w_true=w, support=support)


def gen_labels(
    spec: SynthSpec, X: np.ndarray, w_true: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Generate labels with noise sigma = ||X w|| / (sqrt(SNR) * sqrt(n)).

    LR: real responses X w + eps. LG: noisy logits thresholded at zero.
    MC: argmax over per-class noisy logits (independent noise per class).
    Returns (labels, realized sigma).
    """
    n = X.shape[0]
    if spec.task.name == MC:
        W = w_true.reshape(spec.task.n_outputs, spec.p)
        logits = X @ W.T
    else:
        logits = X @ w_true
    sigma = float(np.linalg.norm(logits) / (np.sqrt(spec.snr) * np.sqrt(n)))
    noisy = logits + rng.normal(0.0, sigma, size=logits.shape)
    if spec.task.name == LR:
        return noisy, sigma
    if spec.task.name == LG:
        return (noisy > 0.0).astype(np.int64), sigma
    return np.argmax(noisy, axis=1).astype(np.int64), sigma


def generate(spec: SynthSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, GroundTruth, float]:
    """Full dataset draw: (X, y, ground truth, realized noise sigma)."""
    X = gen_design(spec, rng)
    truth = gen_wtrue(spec, rng)
    y, sigma = gen_labels(spec, X, truth.w_true, rng)
    return X, y, truth, sigma
