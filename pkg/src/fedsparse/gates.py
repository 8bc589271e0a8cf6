"""Hard concrete gates: sampling, deterministic test-time gates, and gradients.

A gate z is produced by stretching a binary concrete sample into
[gamma, zeta] and clamping to [0, 1], so z can be exactly 0 or 1 with
nonzero probability while staying differentiable almost everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

# Uniform noise is drawn in (U_EPS, 1 - U_EPS) so log(u/(1-u)) stays finite.
U_EPS = 1e-6

# Gates are clamped into [Z_EPS, 1 - Z_EPS] before inverting the
# noise-free sigmoid (the hard sigmoid is not invertible at exactly 0 or 1).
Z_EPS = 1e-4


@dataclass(frozen=True)
class GateHyper:
    """Stretch bounds and temperature of the hard concrete distribution."""

    gamma: float = -0.1
    zeta: float = 1.1
    beta_prime: float = 0.66

    def __post_init__(self):
        if not (self.gamma < 0.0 < 1.0 < self.zeta):
            raise ValueError(f"require gamma < 0 < 1 < zeta, got gamma={self.gamma}, zeta={self.zeta}")
        if self.beta_prime <= 0.0:
            raise ValueError(f"temperature beta_prime must be positive, got {self.beta_prime}")

    @property
    def stretch(self) -> float:
        return self.zeta - self.gamma


@dataclass
class GateParams:
    """Per-parameter gate logits (log alpha) plus shared hyperparameters."""

    log_alpha: np.ndarray
    hyper: GateHyper = field(default_factory=GateHyper)

    def __post_init__(self):
        self.log_alpha = np.asarray(self.log_alpha, dtype=np.float64)
        if self.log_alpha.ndim != 1:
            raise ValueError("log_alpha must be a 1-d vector")
        if not np.all(np.isfinite(self.log_alpha)):
            raise ValueError("log_alpha entries must be finite")

    def __len__(self) -> int:
        return self.log_alpha.shape[0]

    def copy(self) -> "GateParams":
        return GateParams(self.log_alpha.copy(), self.hyper)


@dataclass
class GateSample:
    """One draw of gates; the uniform noise u is retained for gradient replay."""

    z: np.ndarray
    s: np.ndarray
    u: np.ndarray


def sample_gates(params: GateParams, rng: np.random.Generator) -> GateSample:
    """Draw training-time gates: concrete sample, stretch, hard-sigmoid clamp."""
    h = params.hyper
    u = rng.uniform(U_EPS, 1.0 - U_EPS, size=params.log_alpha.shape)
    s = expit((np.log(u / (1.0 - u)) + params.log_alpha) / h.beta_prime)
    s_bar = s * h.stretch + h.gamma
    z = np.clip(s_bar, 0.0, 1.0)
    return GateSample(z=z, s=s, u=u)


def gates_from_noise(params: GateParams, u: np.ndarray) -> GateSample:
    """Recompute the deterministic gate transform for frozen noise u."""
    h = params.hyper
    s = expit((np.log(u / (1.0 - u)) + params.log_alpha) / h.beta_prime)
    s_bar = s * h.stretch + h.gamma
    return GateSample(z=np.clip(s_bar, 0.0, 1.0), s=s, u=u)


def test_time_gates(params: GateParams) -> np.ndarray:
    """Deterministic gates without noise: clamp(sigmoid(log_alpha) stretched)."""
    h = params.hyper
    return np.clip(expit(params.log_alpha) * h.stretch + h.gamma, 0.0, 1.0)


def expected_gate(params: GateParams) -> np.ndarray:
    """Per-coordinate probability of an active gate, P(z_j > 0).

    This is the differentiable surrogate whose mean approximates the
    density of nonzero parameters.
    """
    h = params.hyper
    shift = h.beta_prime * np.log(-h.gamma / h.zeta)
    return expit(params.log_alpha - shift)


def expected_gate_grad(params: GateParams) -> np.ndarray:
    """d expected_gate / d log_alpha, i.e. p*(1-p) at the shifted logit."""
    p = expected_gate(params)
    return p * (1.0 - p)


def gate_grad_log_alpha(sample: GateSample, params: GateParams) -> np.ndarray:
    """dz/d log_alpha for a retained sample; exactly zero in clamped regions."""
    h = params.hyper
    s_bar = sample.s * h.stretch + h.gamma
    interior = (s_bar > 0.0) & (s_bar < 1.0)
    return np.where(interior, h.stretch * sample.s * (1.0 - sample.s) / h.beta_prime, 0.0)


def init_gate_params(
    count: int,
    rho_init: float,
    sigma: float = 0.1,
    rng: np.random.Generator | None = None,
    hyper: GateHyper | None = None,
) -> GateParams:
    """Initialize log_alpha ~ Normal(logit(rho_init), sigma^2).

    The default sigma gives variance 0.01; rho_init close to 1 starts
    training dense, close to 0 starts it sparse.
    """
    if not 0.0 < rho_init < 1.0:
        raise ValueError(f"rho_init must lie in (0, 1), got {rho_init}")
    if count < 1:
        raise ValueError("count must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    if rng is None:
        rng = np.random.default_rng()
    mean = logit(rho_init)
    log_alpha = rng.normal(mean, sigma, size=count)
    return GateParams(log_alpha, hyper or GateHyper())


def log_alpha_from_z(z: np.ndarray, hyper: GateHyper) -> np.ndarray:
    """Invert a noise-free gate value back to its logit: beta' * log(z/(1-z)).

    z is clamped into [Z_EPS, 1 - Z_EPS] first so the inverse is always finite.
    """
    zc = np.clip(np.asarray(z, dtype=np.float64), Z_EPS, 1.0 - Z_EPS)
    return hyper.beta_prime * np.log(zc / (1.0 - zc))
