"""Statistical and sparsity diagnostics.

Includes support-recovery TDR, regression and classification scores, and
the soft/binary IOU matrices used to visualize how the sparsity pattern
moves across training epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EpochRecord:
    """One row of the training trace."""

    epoch: int
    train_loss: float
    test_score: float  # R^2 (LR), accuracy (LG/MC), micro-F1 (MLC)
    test_loss: float  # MSE (LR), CE/BCE otherwise
    expected_density: float
    active_gates: int
    lam: float
    constraint_violation: float
    tdr_active: float = math.nan
    tdr_topm: float = math.nan
    uplink_value_bytes: int = 0
    downlink_value_bytes: int = 0
    uplink_index_bytes: int = 0
    downlink_index_bytes: int = 0
    rounds: int = 0
    extras: dict = field(default_factory=dict)


def tdr(estimated_support, true_support) -> float:
    """True discovery rate: |estimated ∩ true| / |true|."""
    true_set = set(int(i) for i in true_support)
    if not true_set:
        raise ValueError("true support is empty")
    est_set = set(int(i) for i in estimated_support)
    return len(est_set & true_set) / len(true_set)


def mse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    _check_lengths(y_true, y_pred)
    return float(np.mean((y_true - y_pred) ** 2))


def r2(y_true, y_pred) -> float:
    """Coefficient of determination; NaN when y_true is constant."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    _check_lengths(y_true, y_pred)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return math.nan
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def cross_entropy(y_true, probs, eps: float = 1e-12) -> float:
    """Mean CE for class-index labels against predicted class probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    y_true = np.asarray(y_true)
    if probs.ndim == 1:  # binary: probs = P(y=1)
        p = np.clip(probs, eps, 1.0 - eps)
        return float(-np.mean(y_true * np.log(p) + (1 - y_true) * np.log(1.0 - p)))
    p = np.clip(probs[np.arange(len(y_true)), y_true], eps, 1.0)
    return float(-np.mean(np.log(p)))


def binary_cross_entropy(y_true, probs, eps: float = 1e-12) -> float:
    """Mean BCE over all (sample, label) cells of a multi-label matrix."""
    p = np.clip(np.asarray(probs, dtype=np.float64), eps, 1.0 - eps)
    y = np.asarray(y_true, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def micro_f1(y_true, scores, threshold: float = 0.5) -> float:
    """Micro-averaged F1 pooling TP/FP/FN over every (sample, label) pair.

    `scores` are probabilities thresholded at 0.5 by default; binary labels
    may be passed directly.
    """
    y = np.asarray(y_true).astype(bool)
    pred = np.asarray(scores) >= threshold
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 1.0  # nothing to predict and nothing predicted
    return 2 * tp / denom


def soft_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Soft Jaccard of two gate vectors: sum(min) / sum(max)."""
    num = float(np.minimum(a, b).sum())
    den = float(np.maximum(a, b).sum())
    if den == 0.0:
        return 1.0  # identical emptiness
    return num / den


def soft_iou_matrix(gate_traces) -> np.ndarray:
    """Pairwise soft IOU of per-epoch test-time gate vectors."""
    gate_traces = [np.asarray(g, dtype=np.float64) for g in gate_traces]
    if len(gate_traces) < 2:
        raise ValueError("need at least two epochs of gates")
    T = len(gate_traces)
    M = np.empty((T, T))
    for i in range(T):
        for j in range(i, T):
            M[i, j] = M[j, i] = soft_iou(gate_traces[i], gate_traces[j])
    return M


def mask_iou_matrix(masks) -> np.ndarray:
    """Pairwise Jaccard of per-epoch binary support masks."""
    masks = [np.asarray(m).astype(bool) for m in masks]
    if len(masks) < 2:
        raise ValueError("need at least two epochs of masks")
    T = len(masks)
    M = np.empty((T, T))
    for i in range(T):
        for j in range(i, T):
            M[i, j] = M[j, i] = soft_iou(masks[i].astype(float), masks[j].astype(float))
    return M


def _check_lengths(a, b):
    if len(a) != len(b):
        raise ValueError("length mismatch")
    if len(a) < 2:
        raise ValueError("need at least two samples")
