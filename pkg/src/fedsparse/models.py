"""Gated GLM-family models with analytic gradients.

Supported tasks: linear regression, logistic regression, softmax
multi-class, and multi-label classification with per-label logistic units.
The effective weights are theta_tilde * z; gradients flow back to both the
free weights and the gate logits through the retained gate sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .gates import GateParams, GateSample, gate_grad_log_alpha

LR = "lr"
LG = "lg"
MC = "mc"
MLC = "mlc"


@dataclass(frozen=True)
class TaskKind:
    name: str
    n_outputs: int = 1

    def __post_init__(self):
        if self.name not in (LR, LG, MC, MLC):
            raise ValueError(f"unknown task kind {self.name!r}")
        if self.name == MC and self.n_outputs < 2:
            raise ValueError("multi-class task needs at least 2 classes")
        if self.name == MLC and self.n_outputs < 1:
            raise ValueError("multi-label task needs at least 1 label")
        if self.name in (LR, LG) and self.n_outputs != 1:
            raise ValueError(f"{self.name} task has a single output")

    @classmethod
    def linear_regression(cls) -> "TaskKind":
        return cls(LR)

    @classmethod
    def logistic_regression(cls) -> "TaskKind":
        return cls(LG)

    @classmethod
    def multi_class(cls, n_classes: int) -> "TaskKind":
        return cls(MC, n_classes)

    @classmethod
    def multi_label(cls, n_labels: int) -> "TaskKind":
        return cls(MLC, n_labels)

    def param_count(self, input_dim: int) -> int:
        return self.n_outputs * input_dim


@dataclass
class SparseModel:
    """Reparameterized model: free weights theta_tilde gated elementwise.

    For MC/MLC the flat weight vector is the row-major (output-major)
    flattening of the (n_outputs, input_dim) weight matrix, so gate indices
    and top-m selections share one index space.
    """

    theta_tilde: np.ndarray
    gates: GateParams
    task: TaskKind
    input_dim: int

    def __post_init__(self):
        self.theta_tilde = np.asarray(self.theta_tilde, dtype=np.float64).ravel()
        expected = self.task.param_count(self.input_dim)
        if self.theta_tilde.shape[0] != expected:
            raise ValueError(
                f"theta_tilde has {self.theta_tilde.shape[0]} entries, task needs {expected}"
            )
        if len(self.gates) != expected:
            raise ValueError("gate vector length must equal parameter count")

    @property
    def n_params(self) -> int:
        return self.theta_tilde.shape[0]

    def effective_theta(self, z: np.ndarray) -> np.ndarray:
        return self.theta_tilde * z

    def copy(self) -> "SparseModel":
        return SparseModel(self.theta_tilde.copy(), self.gates.copy(), self.task, self.input_dim)


@dataclass
class GradPair:
    """Loss gradients with respect to the free weights and the gate logits."""

    g_theta: np.ndarray
    g_phi: np.ndarray


def _logits(task: TaskKind, theta: np.ndarray, X) -> np.ndarray:
    if task.n_outputs == 1:
        out = X @ theta
    else:
        W = theta.reshape(task.n_outputs, -1)
        out = X @ W.T
    return np.asarray(out)


def predict(task: TaskKind, theta: np.ndarray, X) -> np.ndarray:
    """Forward pass of a plain (un-gated) GLM with effective weights theta."""
    logits = _logits(task, theta, X)
    if task.name == LR:
        return logits
    if task.name in (LG, MLC):
        return expit(logits)
    # softmax, numerically stable
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: SparseModel, z: np.ndarray, X) -> np.ndarray:
    """Predictions of the gated model at gate vector z."""
    _check_batch(model, X)
    return predict(model.task, model.effective_theta(z), X)


def plain_loss_grad(task: TaskKind, theta: np.ndarray, X, y) -> tuple[float, np.ndarray]:
    """Normalized loss and its gradient with respect to the effective weights.

    Losses: MSE (LR), mean BCE from logits (LG), mean softmax CE (MC), and
    BCE averaged over samples and labels (MLC).
    """
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    logits = _logits(task, theta, X)
    if task.name == LR:
        resid = logits - y
        loss = float(np.mean(resid**2))
        d_logits = 2.0 * resid / n
    elif task.name == LG:
        # BCE from logits: mean(log(1 + e^l) - y*l)
        loss = float(np.mean(np.logaddexp(0.0, logits) - y * logits))
        d_logits = (expit(logits) - y) / n
    elif task.name == MC:
        lse = _logsumexp(logits)
        loss = float(np.mean(lse - logits[np.arange(n), y]))
        P = np.exp(logits - lse[:, None])
        P[np.arange(n), y] -= 1.0
        d_logits = P / n
    else:  # MLC
        Y = np.asarray(y, dtype=np.float64)
        loss = float(np.mean(np.logaddexp(0.0, logits) - Y * logits))
        d_logits = (expit(logits) - Y) / (n * task.n_outputs)

    if task.n_outputs == 1:
        grad = np.asarray(X.T @ d_logits).ravel()
    else:
        grad = np.asarray(X.T @ d_logits).T.ravel()
    return loss, grad


def loss(model: SparseModel, z: np.ndarray, X, y) -> float:
    """Normalized loss of the gated model at gate vector z."""
    _check_batch(model, X)
    value, _ = plain_loss_grad(model.task, model.effective_theta(z), X, y)
    return value


def loss_and_backward(model: SparseModel, sample: GateSample, X, y) -> tuple[float, GradPair]:
    """Loss plus gradients w.r.t. theta_tilde and log_alpha through the gate chain."""
    _check_batch(model, X)
    value, g_eff = plain_loss_grad(model.task, model.effective_theta(sample.z), X, y)
    dz = gate_grad_log_alpha(sample, model.gates)
    return value, GradPair(g_theta=g_eff * sample.z, g_phi=g_eff * model.theta_tilde * dz)


def backward(model: SparseModel, sample: GateSample, X, y) -> GradPair:
    _, grads = loss_and_backward(model, sample, X, y)
    return grads


def _logsumexp(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1)
    return m + np.log(np.exp(logits - m[:, None]).sum(axis=1))


def _check_batch(model: SparseModel, X) -> None:
    if X.shape[1] != model.input_dim:
        raise ValueError(f"feature dim {X.shape[1]} does not match model input_dim {model.input_dim}")


def is_sparse_rows(X) -> bool:
    return sp.issparse(X)
