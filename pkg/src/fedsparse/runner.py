"""Experiment execution: build data, partition, train, and write outputs.

Each run writes into its output directory:
  trace.csv     one row per epoch (schema below, 9 significant digits)
  report.txt    final metrics, communication ledger, resolved config echo
  partition.json  client id -> sample indices of the training split
  config.yaml   the fully resolved configuration (re-runnable bit-identically)
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import yaml

from . import __version__
from .config import SCHEMA_VERSION, ExperimentConfig, apply_overrides, config_from_dict
from .federation import (
    FEDAVG,
    FEDITER_HT,
    FLOPS,
    FLOPS_PA,
    build_dense_model,
    build_gated_model,
    run_fedavg,
    run_fediter_ht,
    run_flops,
    run_flops_pa,
)
from .constraint import DensityConstraint
from .ingest import Dataset, load_dataset, read_idx, read_libsvm, select_top_labels
from .metrics import EpochRecord
from .models import TaskKind
from .partition import ClientShard, split_dataset
from .synthdata import SynthSpec, generate

TRACE_COLUMNS = (
    "schema_version",
    "epoch",
    "train_loss",
    "test_score",
    "test_loss",
    "expected_density",
    "active_gates",
    "lambda",
    "constraint_violation",
    "tdr_active",
    "tdr_topm",
    "uplink_value_bytes",
    "downlink_value_bytes",
    "uplink_index_bytes",
    "downlink_index_bytes",
    "rounds",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".9g")
    return str(value)


def _record_row(rec: EpochRecord) -> list[str]:
    return [
        str(SCHEMA_VERSION),
        str(rec.epoch),
        _fmt(rec.train_loss),
        _fmt(rec.test_score),
        _fmt(rec.test_loss),
        _fmt(rec.expected_density),
        str(rec.active_gates),
        _fmt(rec.lam),
        _fmt(rec.constraint_violation),
        _fmt(rec.tdr_active),
        _fmt(rec.tdr_topm),
        str(rec.uplink_value_bytes),
        str(rec.downlink_value_bytes),
        str(rec.uplink_index_bytes),
        str(rec.downlink_index_bytes),
        str(rec.rounds),
    ]


def write_trace(path, records: list[EpochRecord]) -> None:
    with Path(path).open("w", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for rec in records:
            fh.write(",".join(_record_row(rec)) + "\n")


def _task_from_config(cfg: ExperimentConfig, y: np.ndarray) -> TaskKind:
    name = cfg.dataset.task
    if name == "lr":
        return TaskKind.linear_regression()
    if name == "lg":
        return TaskKind.logistic_regression()
    if name == "mc":
        n_classes = cfg.dataset.n_classes if cfg.dataset.kind == "synthetic" else int(np.max(y)) + 1
        return TaskKind.multi_class(n_classes)
    return TaskKind.multi_label(y.shape[1])


def _load_real(cfg: ExperimentConfig) -> tuple[Dataset, Dataset | None]:
    ds = cfg.dataset
    if ds.kind == "libsvm":
        train = read_libsvm(ds.resolve_path(ds.path), dim=ds.dim, zero_based=ds.zero_based, multilabel=ds.task == "mlc")
        test = None
        if ds.test_path:
            test = read_libsvm(ds.resolve_path(ds.test_path), dim=train.dim, zero_based=ds.zero_based, multilabel=ds.task == "mlc")
    elif ds.kind == "idx":
        train = read_idx(ds.resolve_path(ds.images_path), ds.resolve_path(ds.labels_path))
        test = None
        if ds.test_images_path and ds.test_labels_path:
            test = read_idx(ds.resolve_path(ds.test_images_path), ds.resolve_path(ds.test_labels_path))
    else:
        train = load_dataset(ds.resolve_path(ds.path))
        test = load_dataset(ds.resolve_path(ds.test_path)) if ds.test_path else None
    if ds.top_labels and ds.task == "mlc":
        train, _ = select_top_labels(train, ds.top_labels)
        if test is not None:
            test, _ = select_top_labels(test, ds.top_labels)
    return train, test


def _append_bias(X):
    if sp.issparse(X):
        return sp.hstack([X, np.ones((X.shape[0], 1))], format="csr")
    return np.hstack([X, np.ones((X.shape[0], 1))])


def prepare_data(cfg: ExperimentConfig):
    """Returns (X_train, y_train, X_test, y_test, task, true_support)."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    true_support = None
    if cfg.dataset.kind == "synthetic":
        ds = cfg.dataset
        task = _task_from_config(cfg, None)
        spec = SynthSpec(n=ds.n, p=ds.p, rho_true=ds.rho_true, rho_cor=ds.rho_cor, snr=ds.snr, task=task)
        X, y, truth, _ = generate(spec, rng)
        true_support = truth.support
        n_test = int(round(ds.test_fraction * ds.n))
        perm = rng.permutation(ds.n)
        test_idx, train_idx = perm[:n_test], perm[n_test:]
        X_train, y_train = X[train_idx], y[train_idx]
        X_test, y_test = X[test_idx], y[test_idx]
    else:
        train, test = _load_real(cfg)
        task = _task_from_config(cfg, train.labels)
        if test is None:
            n_test = int(round(cfg.dataset.test_fraction * train.n))
            perm = rng.permutation(train.n)
            test_idx, train_idx = perm[:n_test], perm[n_test:]
            X_train, y_train = train.rows[train_idx], train.labels[train_idx]
            X_test, y_test = train.rows[test_idx], train.labels[test_idx]
        else:
            X_train, y_train = train.rows, train.labels
            X_test, y_test = test.rows, test.labels
    if cfg.dataset.add_bias:
        X_train = _append_bias(X_train)
        X_test = _append_bias(X_test)
    return X_train, y_train, X_test, y_test, task, true_support


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> list[EpochRecord]:
    """Run one configured experiment and write all output files."""
    X_train, y_train, X_test, y_test, task, true_support = prepare_data(cfg)

    ss = np.random.SeedSequence(cfg.seed)
    _, part_seed, init_seed, train_seed_seq = ss.spawn(4)
    part_rng = np.random.default_rng(part_seed)
    init_rng = np.random.default_rng(init_seed)
    train_seed = int(train_seed_seq.generate_state(1)[0])

    algo = cfg.algorithm
    tune_shard = None
    if algo.server_tune_enabled and algo.server_tune_fraction > 0.0:
        n_tune = max(1, int(round(algo.server_tune_fraction * X_train.shape[0])))
        perm = part_rng.permutation(X_train.shape[0])
        tune_idx, rest = perm[:n_tune], perm[n_tune:]
        tune_shard = ClientShard(-1, X_train[tune_idx], np.asarray(y_train)[tune_idx], indices=tune_idx)
        X_train, y_train = X_train[rest], np.asarray(y_train)[rest]

    shards = split_dataset(X_train, y_train, cfg.partition.clients, cfg.partition.heterogeneity, part_rng)
    input_dim = X_train.shape[1]
    eval_data = (X_test, y_test)

    if algo.algorithm == FLOPS:
        model = build_gated_model(task, input_dim, algo, init_rng)
        constraint = DensityConstraint(algo.rho_targ, eta_lambda=algo.resolved_eta_lambda(model.n_params))
        records = run_flops(algo, shards, model, constraint, train_seed, eval_data, true_support)
    elif algo.algorithm == FLOPS_PA:
        model = build_gated_model(task, input_dim, algo, init_rng)
        constraint = DensityConstraint(algo.rho_targ, eta_lambda=algo.resolved_eta_lambda(model.n_params))
        records = run_flops_pa(algo, shards, model, constraint, train_seed, eval_data, true_support, tune_shard)
    elif algo.algorithm == FEDITER_HT:
        model = build_dense_model(task, input_dim, init_rng)
        records = run_fediter_ht(algo, shards, model, train_seed, eval_data, true_support)
    else:
        model = build_dense_model(task, input_dim, init_rng)
        records = run_fedavg(algo, shards, model, train_seed, eval_data, true_support)

    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(out / "trace.csv", records)
    manifest = {str(s.client_id): [int(i) for i in s.indices] for s in shards}
    (out / "partition.json").write_text(json.dumps(manifest))
    (out / "config.yaml").write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    _write_report(out / "report.txt", cfg, records)
    return records


def _write_report(path, cfg: ExperimentConfig, records: list[EpochRecord]) -> None:
    final = records[-1]
    lines = [
        f"fedsparse {__version__}",
        f"algorithm: {cfg.algorithm.algorithm}",
        f"epochs: {len(records)}",
        "",
        "final epoch:",
        f"  train_loss: {_fmt(final.train_loss)}",
        f"  test_score: {_fmt(final.test_score)}",
        f"  test_loss: {_fmt(final.test_loss)}",
        f"  expected_density: {_fmt(final.expected_density)}",
        f"  active_gates: {final.active_gates}",
        f"  tdr_active: {_fmt(final.tdr_active)}",
        f"  tdr_topm: {_fmt(final.tdr_topm)}",
        f"  lambda: {_fmt(final.lam)}",
        "",
        "communication ledger:",
        f"  uplink_value_bytes: {final.uplink_value_bytes}",
        f"  downlink_value_bytes: {final.downlink_value_bytes}",
        f"  uplink_index_bytes: {final.uplink_index_bytes}",
        f"  downlink_index_bytes: {final.downlink_index_bytes}",
        f"  rounds: {final.rounds}",
        "",
        "resolved config:",
        yaml.safe_dump(cfg.to_dict(), sort_keys=True),
    ]
    Path(path).write_text("\n".join(lines))


def _sweep_cells(cfg: ExperimentConfig) -> list[dict]:
    sweep = cfg.sweep or {}
    axes = sweep.get("axes", {})
    if not axes:
        return [{}]
    keys = sorted(axes)
    cells = []
    for combo in itertools.product(*(axes[k] for k in keys)):
        cells.append(dict(zip(keys, combo)))
    return cells


def _run_cell(base_raw: dict, overrides: dict, out_dir: str) -> dict:
    raw = apply_overrides(base_raw, overrides)
    raw["sweep"] = None
    cfg = config_from_dict(raw)
    try:
        records = run_experiment(cfg, out_dir)
    except Exception as exc:  # sweep continues past failed cells
        return {"out_dir": out_dir, "status": f"failed: {exc}", **overrides}
    final = records[-1]
    return {
        "out_dir": out_dir,
        "status": "ok",
        **overrides,
        "test_score": final.test_score,
        "test_loss": final.test_loss,
        "tdr_active": final.tdr_active,
        "tdr_topm": final.tdr_topm,
        "expected_density": final.expected_density,
        "active_gates": final.active_gates,
        "uplink_value_bytes": final.uplink_value_bytes,
        "downlink_value_bytes": final.downlink_value_bytes,
    }


def run_sweep(cfg: ExperimentConfig, out_root=None, jobs: int = 1) -> list[dict]:
    """Cartesian sweep over the declared axes; one subdirectory per cell."""
    out_root = Path(out_root if out_root is not None else cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    base_raw = cfg.to_dict()
    base_raw.pop("schema_version", None)
    cells = _sweep_cells(cfg)
    tasks = []
    for i, overrides in enumerate(cells):
        slug = "_".join(f"{k.split('.')[-1]}-{v}" for k, v in sorted(overrides.items())) or "base"
        tasks.append((base_raw, overrides, str(out_root / f"cell_{i:03d}_{slug}")))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, *zip(*tasks)))
    else:
        results = [_run_cell(*t) for t in tasks]
    _write_summary(out_root / "summary.csv", results)
    return results


def _write_summary(path, results: list[dict]) -> None:
    keys = sorted({k for r in results for k in r})
    front = [k for k in ("out_dir", "status") if k in keys]
    keys = front + [k for k in keys if k not in front]
    with Path(path).open("w", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for r in results:
            fh.write(",".join(_fmt(r.get(k, "")) if isinstance(r.get(k), float) else str(r.get(k, "")) for k in keys) + "\n")
