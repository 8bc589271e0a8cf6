"""Server/client training loops and the communication-byte ledger.

Four algorithms:
  * gated gradient aggregation: clients send per-batch gradients of the
    reparameterized loss, the server runs the primal/dual updates
    ("flops");
  * gated parameter averaging with compressed top-m messages ("flops_pa");
  * iterative hard-thresholding baseline on a dense model ("fediter_ht");
  * plain federated averaging with last-epoch magnitude pruning ("fedavg").

All loops are deterministic given (config, seed): the server and each
client own independent seeded random streams spawned from the run seed.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import metrics as mt
from .constraint import (
    DensityConstraint,
    constraint_value,
    dual_update,
    scale_log_alpha,
    top_m_mask,
)
from .gates import (
    Z_EPS,
    GateParams,
    expected_gate,
    expected_gate_grad,
    init_gate_params,
    log_alpha_from_z,
    sample_gates,
    test_time_gates,
)
from .metrics import EpochRecord
from .models import LG, LR, MC, SparseModel, TaskKind, loss_and_backward, plain_loss_grad, predict
from .partition import ClientShard, sample_participants

FLOPS = "flops"
FLOPS_PA = "flops_pa"
FEDITER_HT = "fediter_ht"
FEDAVG = "fedavg"

ALGORITHMS = (FLOPS, FLOPS_PA, FEDITER_HT, FEDAVG)

BYTES_PER_VALUE = 4
BYTES_PER_INDEX = 4

ETA_THETA_RANGE = (1e-4, 1e-1)
ETA_PHI_RANGE = (1e-5, 1e-1)


@dataclass
class FederationConfig:
    algorithm: str
    epochs: int
    batch_size: int
    gamma_c: float = 1.0
    eta_theta: float = 5e-2
    eta_phi: float = 5e-2
    eta_lambda: float | None = None  # default: 1/|theta| (flops), 0.1/|theta| (flops_pa)
    rho_targ: float = 0.05
    rho_init: float = 0.95
    steps_per_epoch: int | None = None  # default: ceil(min shard size / B)
    prune_start: int | None = None  # default: 60% of epochs (flops), 0 (flops_pa)
    decay_r: float = 0.05
    literal_scaling: bool = False
    mc_samples: int = 1
    weighting: str | None = None  # "uniform" | "samples"; per-algorithm default
    server_tune_enabled: bool = False
    server_tune_fraction: float = 0.0
    server_tune_steps: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.gamma_c <= 1.0:
            raise ValueError("gamma_c must lie in (0, 1]")
        if not 0.0 < self.rho_targ <= 1.0:
            raise ValueError("rho_targ must lie in (0, 1]")
        if not 0.0 < self.rho_init < 1.0:
            raise ValueError("rho_init must lie in (0, 1)")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if self.weighting not in (None, "uniform", "samples"):
            raise ValueError("weighting must be 'uniform' or 'samples'")
        if self.server_tune_enabled and self.server_tune_steps > 0 and self.server_tune_fraction <= 0.0:
            raise ValueError("server tuning enabled without a tune-set fraction")
        if not ETA_THETA_RANGE[0] <= self.eta_theta <= ETA_THETA_RANGE[1]:
            warnings.warn(f"eta_theta={self.eta_theta} outside stable range {ETA_THETA_RANGE}", stacklevel=2)
        if not ETA_PHI_RANGE[0] <= self.eta_phi <= ETA_PHI_RANGE[1]:
            warnings.warn(f"eta_phi={self.eta_phi} outside stable range {ETA_PHI_RANGE}", stacklevel=2)

    def resolved_eta_lambda(self, n_params: int) -> float:
        if self.eta_lambda is not None:
            return self.eta_lambda
        if self.algorithm == FLOPS_PA:
            return 0.1 / n_params
        return 1.0 / n_params

    def resolved_prune_start(self) -> int:
        if self.prune_start is not None:
            return self.prune_start
        if self.algorithm == FLOPS_PA:
            return 0
        return int(math.floor(0.6 * self.epochs))

    def resolved_steps(self, shards: list[ClientShard]) -> int:
        if self.steps_per_epoch is not None:
            return self.steps_per_epoch
        min_n = min(s.n_c for s in shards)
        return max(1, int(math.ceil(min_n / self.batch_size)))

    def resolved_weighting(self) -> str:
        if self.weighting is not None:
            return self.weighting
        return "uniform" if self.algorithm == FLOPS else "samples"


@dataclass
class CommLedger:
    """Per-direction message-size accounting (value and index bytes split)."""

    uplink_value_bytes: int = 0
    downlink_value_bytes: int = 0
    uplink_index_bytes: int = 0
    downlink_index_bytes: int = 0
    rounds: int = 0

    def add_uplink(self, value_bytes: int, index_bytes: int = 0) -> None:
        self.uplink_value_bytes += value_bytes
        self.uplink_index_bytes += index_bytes

    def add_downlink(self, value_bytes: int, index_bytes: int = 0) -> None:
        self.downlink_value_bytes += value_bytes
        self.downlink_index_bytes += index_bytes


@dataclass
class PaMessage:
    """Compressed payload: top-m (index, theta, z) plus the off-support z mean."""

    top_indices: np.ndarray
    theta_top: np.ndarray
    z_top: np.ndarray
    z_avg_rest: float

    def __post_init__(self):
        self.top_indices = np.asarray(self.top_indices, dtype=np.int64)
        self.theta_top = np.asarray(self.theta_top, dtype=np.float64)
        self.z_top = np.asarray(self.z_top, dtype=np.float64)
        m = self.top_indices.shape[0]
        if self.theta_top.shape[0] != m or self.z_top.shape[0] != m:
            raise ValueError("index/value lengths disagree")
        if m and np.any(np.diff(self.top_indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        if np.any(self.z_top < 0.0) or np.any(self.z_top > 1.0):
            raise ValueError("z values must lie in [0, 1]")
        if not 0.0 <= self.z_avg_rest <= 1.0:
            raise ValueError("z_avg_rest must lie in [0, 1]")

    @property
    def m(self) -> int:
        return self.top_indices.shape[0]

    @property
    def value_bytes(self) -> int:
        return BYTES_PER_VALUE * (2 * self.m + 1)

    @property
    def index_bytes(self) -> int:
        return BYTES_PER_INDEX * self.m


def encode_pa_message(theta: np.ndarray, z: np.ndarray, m: int) -> PaMessage:
    """Keep top-m theta by magnitude, average the remaining z into one scalar."""
    theta = np.asarray(theta, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if theta.shape != z.shape:
        raise ValueError("theta and z must have equal length")
    mask = top_m_mask(theta, m)
    idx = np.flatnonzero(mask)
    rest = ~mask
    z_avg = float(np.mean(z[rest])) if rest.any() else 0.0
    return PaMessage(top_indices=idx, theta_top=theta[idx], z_top=z[idx], z_avg_rest=z_avg)


def expand_pa_message(msg: PaMessage, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruct full-length theta (zeros off-support) and z (mean off-support)."""
    if msg.m and int(msg.top_indices[-1]) >= size:
        raise ValueError("message index out of range")
    theta = np.zeros(size)
    z = np.full(size, msg.z_avg_rest)
    theta[msg.top_indices] = msg.theta_top
    z[msg.top_indices] = msg.z_top
    return theta, z


def decode_pa_message(msg: PaMessage, size: int, hyper=None) -> tuple[np.ndarray, GateParams]:
    """Recover free weights and gate logits: theta_tilde = theta / z, noise-free
    logit inversion for log_alpha; z is clamped before any division."""
    from .gates import GateHyper

    theta, z = expand_pa_message(msg, size)
    zc = np.clip(z, Z_EPS, 1.0 - Z_EPS)
    theta_tilde = np.where(theta != 0.0, theta / zc, 0.0)
    gates = GateParams(log_alpha_from_z(z, hyper or GateHyper()), hyper or GateHyper())
    return theta_tilde, gates


@dataclass
class DenseModel:
    """Plain un-gated GLM used by the thresholding baselines."""

    theta: np.ndarray
    task: TaskKind
    input_dim: int

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).ravel()
        if self.theta.shape[0] != self.task.param_count(self.input_dim):
            raise ValueError("theta length does not match task/input_dim")

    @property
    def n_params(self) -> int:
        return self.theta.shape[0]


def hard_threshold(theta: np.ndarray, m: int) -> np.ndarray:
    """Zero everything outside the m largest magnitudes."""
    mask = top_m_mask(theta, m)
    return np.where(mask, theta, 0.0)


def evaluate_model(task: TaskKind, theta_eff: np.ndarray, X, y) -> tuple[float, float]:
    """(score, loss) at test time: R^2/MSE, ACC/CE, or micro-F1/BCE by task."""
    preds = predict(task, theta_eff, X)
    if task.name == LR:
        return mt.r2(y, preds), mt.mse(y, preds)
    if task.name == LG:
        return mt.accuracy(y, (preds >= 0.5).astype(np.int64)), mt.cross_entropy(y, preds)
    if task.name == MC:
        return mt.accuracy(y, np.argmax(preds, axis=1)), mt.cross_entropy(y, preds)
    return mt.micro_f1(y, preds), mt.binary_cross_entropy(y, preds)


def _aggregation_weights(parts: np.ndarray, shards: list[ClientShard], mode: str) -> np.ndarray:
    if mode == "uniform":
        return np.full(len(parts), 1.0 / len(parts))
    n = np.array([shards[k].n_c for k in parts], dtype=np.float64)
    return n / n.sum()


def _draw_batch(shard: ClientShard, batch_size: int, rng: np.random.Generator):
    n = shard.n_c
    if n < batch_size:
        warnings.warn(f"client {shard.client_id}: shard of {n} < batch size {batch_size}, sampling with replacement", stacklevel=2)
        idx = rng.integers(0, n, size=batch_size)
    else:
        idx = rng.choice(n, size=batch_size, replace=False)
    return shard.rows[idx], shard.labels[idx]


def _spawn_rngs(seed: int, n_clients: int):
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(n_clients + 2)
    server = np.random.default_rng(children[0])
    tune = np.random.default_rng(children[1])
    clients = [np.random.default_rng(c) for c in children[2:]]
    return server, tune, clients


def _tdr_pair(theta_eff: np.ndarray, active_support: np.ndarray, m: int, true_support) -> tuple[float, float]:
    if true_support is None or len(true_support) == 0:
        return math.nan, math.nan
    topm = np.flatnonzero(top_m_mask(theta_eff, m))
    return mt.tdr(active_support, true_support), mt.tdr(topm, true_support)


def _ledger_fields(ledger: CommLedger) -> dict:
    return dict(
        uplink_value_bytes=ledger.uplink_value_bytes,
        downlink_value_bytes=ledger.downlink_value_bytes,
        uplink_index_bytes=ledger.uplink_index_bytes,
        downlink_index_bytes=ledger.downlink_index_bytes,
        rounds=ledger.rounds,
    )


def _gated_record(
    epoch: int,
    model: SparseModel,
    train_loss: float,
    lam: float,
    violation: float,
    m: int,
    ledger: CommLedger,
    eval_data,
    true_support,
) -> EpochRecord:
    z_hat = test_time_gates(model.gates)
    theta_eff = model.theta_tilde * z_hat
    score, tloss = (math.nan, math.nan)
    if eval_data is not None:
        score, tloss = evaluate_model(model.task, theta_eff, *eval_data)
    tdr_active, tdr_topm = _tdr_pair(theta_eff, np.flatnonzero(z_hat > 0.0), m, true_support)
    return EpochRecord(
        epoch=epoch,
        train_loss=train_loss,
        test_score=score,
        test_loss=tloss,
        expected_density=float(expected_gate(model.gates).mean()),
        active_gates=int(np.count_nonzero(z_hat)),
        lam=lam,
        constraint_violation=violation,
        tdr_active=tdr_active,
        tdr_topm=tdr_topm,
        **_ledger_fields(ledger),
    )


def _dense_record(
    epoch: int,
    model: DenseModel,
    train_loss: float,
    m: int,
    ledger: CommLedger,
    eval_data,
    true_support,
) -> EpochRecord:
    score, tloss = (math.nan, math.nan)
    if eval_data is not None:
        score, tloss = evaluate_model(model.task, model.theta, *eval_data)
    nnz = np.flatnonzero(model.theta)
    tdr_active, tdr_topm = _tdr_pair(model.theta, nnz, m, true_support)
    return EpochRecord(
        epoch=epoch,
        train_loss=train_loss,
        test_score=score,
        test_loss=tloss,
        expected_density=len(nnz) / model.n_params,
        active_gates=len(nnz),
        lam=0.0,
        constraint_violation=math.nan,
        tdr_active=tdr_active,
        tdr_topm=tdr_topm,
        **_ledger_fields(ledger),
    )


def _client_grads(model: SparseModel, shard: ClientShard, config: FederationConfig, rng):
    """Average loss and gradients over R fresh gate samples on one mini-batch."""
    Xb, yb = _draw_batch(shard, config.batch_size, rng)
    R = config.mc_samples
    loss_acc = 0.0
    g_theta = np.zeros(model.n_params)
    g_phi = np.zeros(model.n_params)
    for _ in range(R):
        smp = sample_gates(model.gates, rng)
        value, grads = loss_and_backward(model, smp, Xb, yb)
        loss_acc += value / R
        g_theta += grads.g_theta / R
        g_phi += grads.g_phi / R
    return loss_acc, g_theta, g_phi


def run_flops(
    config: FederationConfig,
    shards: list[ClientShard],
    model: SparseModel,
    constraint: DensityConstraint,
    seed: int,
    eval_data=None,
    true_support=None,
    gate_trace: list | None = None,
) -> list[EpochRecord]:
    """Per-batch gradient aggregation with a global dual variable."""
    if config.algorithm != FLOPS:
        raise ValueError("config.algorithm must be 'flops'")
    C = len(shards)
    n_params = model.n_params
    m = max(1, int(math.floor(config.rho_targ * n_params)))
    steps = config.resolved_steps(shards)
    prune_start = config.resolved_prune_start()
    constraint = dataclasses.replace(constraint, eta_lambda=config.resolved_eta_lambda(n_params))
    weighting = config.resolved_weighting()
    server_rng, _, client_rngs = _spawn_rngs(seed, C)
    ledger = CommLedger()
    records: list[EpochRecord] = []
    last_violation = constraint_value(model.gates, config.rho_targ)

    for epoch in range(1, config.epochs + 1):
        parts = sample_participants(C, config.gamma_c, server_rng)
        weights = _aggregation_weights(parts, shards, weighting)
        epoch_loss = 0.0
        for _ in range(steps):
            agg_theta = np.zeros(n_params)
            agg_phi = np.zeros(n_params)
            step_loss = 0.0
            for k, w in zip(parts, weights):
                value, g_t, g_p = _client_grads(model, shards[k], config, client_rngs[k])
                agg_theta += w * g_t
                agg_phi += w * g_p
                step_loss += w * value
                # gradients up, refreshed model down, plus the dual scalar
                ledger.add_uplink(BYTES_PER_VALUE * n_params)
                ledger.add_downlink(BYTES_PER_VALUE * n_params + BYTES_PER_VALUE)
            lam = constraint.lam
            violation = constraint_value(model.gates, config.rho_targ)
            con_grad = expected_gate_grad(model.gates) / n_params
            model.theta_tilde = model.theta_tilde - config.eta_theta * agg_theta
            model.gates = GateParams(
                model.gates.log_alpha - config.eta_phi * (agg_phi + lam * con_grad),
                model.gates.hyper,
            )
            constraint = dual_update(constraint, violation)
            last_violation = violation
            ledger.rounds += 1
            epoch_loss += step_loss / steps
        if epoch > prune_start:
            z_hat = test_time_gates(model.gates)
            model.gates = scale_log_alpha(
                model.gates, model.theta_tilde * z_hat, m, config.decay_r, config.literal_scaling
            )
        records.append(
            _gated_record(epoch, model, epoch_loss, constraint.lam, last_violation, m, ledger, eval_data, true_support)
        )
        if gate_trace is not None:
            gate_trace.append(test_time_gates(model.gates))
    return records


def server_tune(
    model: SparseModel,
    constraint: DensityConstraint,
    tune_shard: ClientShard | None,
    steps: int,
    eta_theta: float,
    eta_phi: float,
    batch_size: int,
    rng: np.random.Generator,
) -> SparseModel:
    """A few gated SGD steps on the server's held-out tune shard."""
    if steps <= 0:
        return model
    if tune_shard is None:
        raise ValueError("server tuning requested without a tune shard")
    n_params = model.n_params
    for _ in range(steps):
        Xb, yb = _draw_batch(tune_shard, min(batch_size, tune_shard.n_c), rng)
        smp = sample_gates(model.gates, rng)
        _, grads = loss_and_backward(model, smp, Xb, yb)
        con_grad = expected_gate_grad(model.gates) / n_params
        model.theta_tilde = model.theta_tilde - eta_theta * grads.g_theta
        model.gates = GateParams(
            model.gates.log_alpha - eta_phi * (grads.g_phi + constraint.lam * con_grad),
            model.gates.hyper,
        )
    return model


def run_flops_pa(
    config: FederationConfig,
    shards: list[ClientShard],
    model: SparseModel,
    constraint: DensityConstraint,
    seed: int,
    eval_data=None,
    true_support=None,
    tune_shard: ClientShard | None = None,
    gate_trace: list | None = None,
) -> list[EpochRecord]:
    """Per-epoch parameter averaging with compressed top-m messages and local duals."""
    if config.algorithm != FLOPS_PA:
        raise ValueError("config.algorithm must be 'flops_pa'")
    C = len(shards)
    n_params = model.n_params
    m = max(1, int(math.floor(config.rho_targ * n_params)))
    steps = config.resolved_steps(shards)
    prune_start = config.resolved_prune_start()
    eta_lambda = config.resolved_eta_lambda(n_params)
    constraint = dataclasses.replace(constraint, eta_lambda=eta_lambda)
    weighting = config.resolved_weighting()
    server_rng, tune_rng, client_rngs = _spawn_rngs(seed, C)
    ledger = CommLedger()
    records: list[EpochRecord] = []

    for epoch in range(1, config.epochs + 1):
        if epoch > prune_start:
            z_hat = test_time_gates(model.gates)
            model.gates = scale_log_alpha(
                model.gates, model.theta_tilde * z_hat, m, config.decay_r, config.literal_scaling
            )
        z_hat = test_time_gates(model.gates)
        msg_down = encode_pa_message(model.theta_tilde * z_hat, z_hat, m)
        ledger.add_downlink(msg_down.value_bytes, msg_down.index_bytes)

        parts = sample_participants(C, config.gamma_c, server_rng)
        weights = _aggregation_weights(parts, shards, weighting)
        agg_theta = np.zeros(n_params)
        agg_z = np.zeros(n_params)
        epoch_loss = 0.0
        up_bytes = (0, 0)
        for k, w in zip(parts, weights):
            rng = client_rngs[k]
            theta_tilde_k, gates_k = decode_pa_message(msg_down, n_params, model.gates.hyper)
            local = SparseModel(theta_tilde_k, gates_k, model.task, model.input_dim)
            lam_k = constraint.lam
            local_loss = 0.0
            for _ in range(steps):
                value, g_t, g_p = _client_grads(local, shards[k], config, rng)
                violation = constraint_value(local.gates, config.rho_targ)
                con_grad = expected_gate_grad(local.gates) / n_params
                local.theta_tilde = local.theta_tilde - config.eta_theta * g_t
                local.gates = GateParams(
                    local.gates.log_alpha - config.eta_phi * (g_p + lam_k * con_grad),
                    local.gates.hyper,
                )
                lam_k = 0.0 if violation <= 0.0 else lam_k + eta_lambda * violation
                local_loss += value / steps
            if epoch > prune_start:
                z_loc = test_time_gates(local.gates)
                local.gates = scale_log_alpha(
                    local.gates, local.theta_tilde * z_loc, m, config.decay_r, config.literal_scaling
                )
            z_k = sample_gates(local.gates, rng).z
            theta_k = local.theta_tilde * z_k
            msg_up = encode_pa_message(theta_k, z_k, m)
            up_bytes = (msg_up.value_bytes, msg_up.index_bytes)
            theta_full, z_full = expand_pa_message(msg_up, n_params)
            agg_theta += w * theta_full
            agg_z += w * z_full
            epoch_loss += w * local_loss
        ledger.add_uplink(*up_bytes)
        ledger.rounds += 1

        z_clamped = np.clip(agg_z, Z_EPS, 1.0 - Z_EPS)
        model.theta_tilde = np.where(agg_theta != 0.0, agg_theta / z_clamped, 0.0)
        model.gates = GateParams(log_alpha_from_z(agg_z, model.gates.hyper), model.gates.hyper)
        violation = constraint_value(model.gates, config.rho_targ)
        constraint = dual_update(constraint, violation)
        if config.server_tune_enabled and config.server_tune_steps > 0:
            server_tune(
                model,
                constraint,
                tune_shard,
                config.server_tune_steps,
                config.eta_theta,
                config.eta_phi,
                config.batch_size,
                tune_rng,
            )
        records.append(
            _gated_record(epoch, model, epoch_loss, constraint.lam, violation, m, ledger, eval_data, true_support)
        )
        if gate_trace is not None:
            gate_trace.append(test_time_gates(model.gates))
    return records


def _run_dense(
    config: FederationConfig,
    shards: list[ClientShard],
    model: DenseModel,
    seed: int,
    threshold_every_epoch: bool,
    per_epoch_value_bytes: int,
    eval_data,
    true_support,
    mask_trace: list | None,
) -> list[EpochRecord]:
    C = len(shards)
    n_params = model.n_params
    m = max(1, int(math.floor(config.rho_targ * n_params)))
    steps = config.resolved_steps(shards)
    weighting = config.resolved_weighting()
    server_rng, _, client_rngs = _spawn_rngs(seed, C)
    ledger = CommLedger()
    records: list[EpochRecord] = []

    for epoch in range(1, config.epochs + 1):
        parts = sample_participants(C, config.gamma_c, server_rng)
        weights = _aggregation_weights(parts, shards, weighting)
        agg = np.zeros(n_params)
        epoch_loss = 0.0
        for k, w in zip(parts, weights):
            rng = client_rngs[k]
            theta_k = model.theta.copy()
            local_loss = 0.0
            for _ in range(steps):
                Xb, yb = _draw_batch(shards[k], config.batch_size, rng)
                value, grad = plain_loss_grad(model.task, theta_k, Xb, yb)
                theta_k -= config.eta_theta * grad
                local_loss += value / steps
            agg += w * theta_k
            epoch_loss += w * local_loss
        model.theta = agg
        if threshold_every_epoch:
            model.theta = hard_threshold(model.theta, m)
        elif epoch == config.epochs:
            model.theta = hard_threshold(model.theta, m)  # last-epoch magnitude pruning
        ledger.add_uplink(per_epoch_value_bytes, BYTES_PER_INDEX * m if threshold_every_epoch else 0)
        ledger.add_downlink(per_epoch_value_bytes, BYTES_PER_INDEX * m if threshold_every_epoch else 0)
        ledger.rounds += 1
        records.append(_dense_record(epoch, model, epoch_loss, m, ledger, eval_data, true_support))
        if mask_trace is not None:
            mask_trace.append(model.theta != 0.0)
    return records


def run_fediter_ht(
    config: FederationConfig,
    shards: list[ClientShard],
    model: DenseModel,
    seed: int,
    eval_data=None,
    true_support=None,
    mask_trace: list | None = None,
) -> list[EpochRecord]:
    """Local SGD + averaging, hard-thresholded to m nonzeros every epoch."""
    if config.algorithm != FEDITER_HT:
        raise ValueError("config.algorithm must be 'fediter_ht'")
    m_bytes = int(BYTES_PER_VALUE * math.floor(config.rho_targ * model.n_params))
    return _run_dense(config, shards, model, seed, True, max(BYTES_PER_VALUE, m_bytes), eval_data, true_support, mask_trace)


def run_fedavg(
    config: FederationConfig,
    shards: list[ClientShard],
    model: DenseModel,
    seed: int,
    eval_data=None,
    true_support=None,
    mask_trace: list | None = None,
) -> list[EpochRecord]:
    """Plain federated averaging; magnitude pruning only after the final epoch."""
    if config.algorithm != FEDAVG:
        raise ValueError("config.algorithm must be 'fedavg'")
    return _run_dense(
        config, shards, model, seed, False, BYTES_PER_VALUE * model.n_params, eval_data, true_support, mask_trace
    )


def build_gated_model(task: TaskKind, input_dim: int, config: FederationConfig, rng: np.random.Generator, theta_scale: float = 0.01) -> SparseModel:
    """Fresh reparameterized model with gate logits at logit(rho_init)."""
    n_params = task.param_count(input_dim)
    gates = init_gate_params(n_params, config.rho_init, rng=rng)
    theta = rng.normal(0.0, theta_scale, size=n_params)
    return SparseModel(theta, gates, task, input_dim)


def build_dense_model(task: TaskKind, input_dim: int, rng: np.random.Generator, theta_scale: float = 0.01) -> DenseModel:
    theta = rng.normal(0.0, theta_scale, size=task.param_count(input_dim))
    return DenseModel(theta, task, input_dim)
