"""Density constraint surrogate, dual ascent with restart, and logit scaling.

The constraint compares the mean probability-of-active gate against the
target density. The multiplier is raised while the constraint is violated
and reset to zero the moment it is satisfied. After a configurable prune
start, gate logits at the top-m effective weights are pushed toward
activation and all others toward deactivation to reach exact sparsity.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .gates import GateParams, expected_gate


@dataclass(frozen=True)
class DensityConstraint:
    rho_targ: float
    lam: float = 0.0
    eta_lambda: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.rho_targ < 1.0:
            raise ValueError(f"rho_targ must lie in (0, 1), got {self.rho_targ}")
        if self.lam < 0.0:
            raise ValueError("lambda must be non-negative")
        if self.eta_lambda <= 0.0:
            raise ValueError("eta_lambda must be positive")


@dataclass(frozen=True)
class PruneSchedule:
    prune_start: int
    decay_r: float = 0.05
    literal_formula: bool = False

    def __post_init__(self):
        if self.prune_start < 0:
            raise ValueError("prune_start must be non-negative")
        if not 0.0 <= self.decay_r < 1.0:
            raise ValueError("decay_r must lie in [0, 1)")


def constraint_value(gates: GateParams, rho_targ: float) -> float:
    """Mean expected gate minus the target density; negative when satisfied."""
    return float(expected_gate(gates).mean()) - rho_targ


def dual_update(c: DensityConstraint, violation: float) -> DensityConstraint:
    """One ascent step on lambda, restarting at 0 whenever violation <= 0."""
    if violation <= 0.0:
        lam = 0.0
    else:
        lam = c.lam + c.eta_lambda * violation
    return dataclasses.replace(c, lam=lam)


def top_m_mask(values: np.ndarray, m: int) -> np.ndarray:
    """Boolean mask of the m largest-magnitude entries; ties go to lower indices."""
    values = np.asarray(values)
    n = values.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}], got {m}")
    order = np.argsort(-np.abs(values), kind="stable")
    mask = np.zeros(n, dtype=bool)
    mask[order[:m]] = True
    return mask


def scale_log_alpha(
    gates: GateParams,
    theta_effective: np.ndarray,
    m: int,
    decay_r: float,
    literal_formula: bool = False,
) -> GateParams:
    """Scale gate logits toward activation at the top-m effective weights.

    Default mode is sign-aware: masked logits move toward +inf, unmasked
    toward -inf, regardless of their current sign. The literal mode applies
    log_alpha*(1+r) inside the mask and log_alpha*(1-r) outside, which
    moves negative masked logits the wrong way; it is kept as an option.
    """
    mask = top_m_mask(theta_effective, m)
    la = gates.log_alpha
    r = decay_r
    if literal_formula:
        new = np.where(mask, la * (1.0 + r), la * (1.0 - r))
    else:
        toward_active = np.where(la >= 0.0, la * (1.0 + r), la * (1.0 - r))
        toward_inactive = np.where(la >= 0.0, la * (1.0 - r), la * (1.0 + r))
        new = np.where(mask, toward_active, toward_inactive)
    return GateParams(new, gates.hyper)
