import json
import math

import numpy as np
import pytest
import yaml

from fedsparse.config import config_from_dict
from fedsparse.metrics import EpochRecord
from fedsparse.runner import (
    TRACE_COLUMNS,
    prepare_data,
    run_experiment,
    run_sweep,
    write_trace,
)


def small_config(**overrides):
    raw = {
        "seed": 1,
        "dataset": {"kind": "synthetic", "task": "lr", "n": 400, "p": 30, "rho_true": 0.2, "snr": 10.0},
        "partition": {"clients": 4},
        "algorithm": {"name": "flops", "epochs": 3, "batch_size": 16, "rho_targ": 0.2, "rho_init": 0.5},
    }
    for dotted, v in overrides.items():
        node = raw
        parts = dotted.split(".")
        for k in parts[:-1]:
            node = node.setdefault(k, {})
        node[parts[-1]] = v
    return config_from_dict(raw)


class TestWriteTrace:
    def test_format(self, tmp_path):
        rec = EpochRecord(
            epoch=1, train_loss=0.123456789123, test_score=math.nan, test_loss=2.0,
            expected_density=0.5, active_gates=10, lam=0.0, constraint_violation=-0.1,
            uplink_value_bytes=40, downlink_value_bytes=44, rounds=2,
        )
        f = tmp_path / "trace.csv"
        write_trace(f, [rec])
        lines = f.read_text().splitlines()
        assert lines[0] == ",".join(TRACE_COLUMNS)
        cells = lines[1].split(",")
        assert cells[0] == "1"  # schema_version
        assert cells[2] == "0.123456789"  # 9 significant digits
        assert cells[3] == ""  # NaN -> empty
        assert cells[6] == "10"
        assert cells[11] == "40"

    def test_newline_convention(self, tmp_path):
        rec = EpochRecord(1, 0.0, 0.0, 0.0, 0.0, 0, 0.0, 0.0)
        f = tmp_path / "trace.csv"
        write_trace(f, [rec])
        raw = f.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


class TestPrepareData:
    def test_synthetic_split_sizes(self):
        cfg = small_config()
        X_train, y_train, X_test, y_test, task, support = prepare_data(cfg)
        assert X_train.shape == (320, 30)
        assert X_test.shape == (80, 30)
        assert task.name == "lr"
        assert len(support) == 6  # floor(0.2 * 30)

    def test_deterministic_in_seed(self):
        a = prepare_data(small_config())
        b = prepare_data(small_config())
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        np.testing.assert_array_equal(a[5], b[5])

    def test_add_bias_column(self):
        cfg = small_config(**{"dataset.add_bias": True})
        X_train, _, X_test, _, _, _ = prepare_data(cfg)
        assert X_train.shape[1] == 31
        np.testing.assert_array_equal(X_train[:, -1], 1.0)
        np.testing.assert_array_equal(X_test[:, -1], 1.0)

    def test_real_data_with_canonical_test(self, tmp_path):
        f_train = tmp_path / "train.txt"
        f_test = tmp_path / "test.txt"
        rng = np.random.default_rng(0)
        for f, n in ((f_train, 40), (f_test, 10)):
            lines = []
            for _ in range(n):
                label = rng.integers(0, 2)
                lines.append(f"{label} 1:{rng.normal():.4f} 2:{rng.normal():.4f}")
            f.write_text("\n".join(lines) + "\n")
        cfg = small_config(**{
            "dataset.kind": "libsvm",
            "dataset.task": "lg",
            "dataset.path": str(f_train),
            "dataset.test_path": str(f_test),
        })
        X_train, y_train, X_test, y_test, task, support = prepare_data(cfg)
        assert X_train.shape[0] == 40
        assert X_test.shape[0] == 10
        assert task.name == "lg"
        assert support is None


class TestRunExperiment:
    def test_writes_all_outputs(self, tmp_path):
        cfg = small_config()
        records = run_experiment(cfg, tmp_path / "run")
        out = tmp_path / "run"
        assert (out / "trace.csv").exists()
        assert (out / "report.txt").exists()
        assert (out / "partition.json").exists()
        assert (out / "config.yaml").exists()
        assert len(records) == 3
        # partition manifest is an exact cover of the training samples
        manifest = json.loads((out / "partition.json").read_text())
        all_idx = sorted(i for idx in manifest.values() for i in idx)
        assert all_idx == list(range(320))
        # config echo is loadable and matches
        echoed = yaml.safe_load((out / "config.yaml").read_text())
        assert echoed["seed"] == 1
        assert echoed["algorithm"]["algorithm"] == "flops"

    def test_byte_identical_reruns(self, tmp_path):
        cfg = small_config()
        run_experiment(cfg, tmp_path / "a")
        run_experiment(small_config(), tmp_path / "b")
        assert (tmp_path / "a/trace.csv").read_bytes() == (tmp_path / "b/trace.csv").read_bytes()
        assert (tmp_path / "a/partition.json").read_bytes() == (tmp_path / "b/partition.json").read_bytes()

    def test_seed_changes_trace(self, tmp_path):
        run_experiment(small_config(), tmp_path / "a")
        run_experiment(small_config(seed=2), tmp_path / "b")
        assert (tmp_path / "a/trace.csv").read_bytes() != (tmp_path / "b/trace.csv").read_bytes()

    @pytest.mark.parametrize("algo", ["flops_pa", "fediter_ht", "fedavg"])
    def test_other_algorithms_run(self, tmp_path, algo):
        cfg = small_config(**{"algorithm.name": algo})
        records = run_experiment(cfg, tmp_path / algo)
        assert len(records) == 3
        trace = (tmp_path / algo / "trace.csv").read_text().splitlines()
        assert len(trace) == 4

    def test_server_tune_carves_shard(self, tmp_path):
        cfg = small_config(**{
            "algorithm.name": "flops_pa",
            "algorithm.server_tune_enabled": True,
            "algorithm.server_tune_fraction": 0.1,
            "algorithm.server_tune_steps": 2,
        })
        run_experiment(cfg, tmp_path / "run")
        manifest = json.loads((tmp_path / "run/partition.json").read_text())
        n_in_shards = sum(len(v) for v in manifest.values())
        assert n_in_shards == 320 - 32  # 10% held out for tuning


class TestRunSweep:
    def test_grid_and_summary(self, tmp_path):
        cfg = small_config()
        cfg.sweep = {"axes": {"algorithm.eta_theta": [0.01, 0.05], "seed": [1, 2]}}
        results = run_sweep(cfg, tmp_path / "sweep")
        assert len(results) == 4
        assert all(r["status"] == "ok" for r in results)
        summary = (tmp_path / "sweep/summary.csv").read_text().splitlines()
        assert len(summary) == 5
        assert "test_score" in summary[0]
        # one directory per cell
        cells = sorted(p.name for p in (tmp_path / "sweep").iterdir() if p.is_dir())
        assert len(cells) == 4

    def test_failed_cell_reported_not_raised(self, tmp_path):
        cfg = small_config()
        # clients > train samples makes the partition fail for that cell
        cfg.sweep = {"axes": {"partition.clients": [4, 100000]}}
        results = run_sweep(cfg, tmp_path / "sweep")
        statuses = sorted(r["status"] for r in results)
        assert statuses[0].startswith("failed")
        assert statuses[1] == "ok"

    def test_empty_sweep_runs_base(self, tmp_path):
        cfg = small_config()
        results = run_sweep(cfg, tmp_path / "sweep")
        assert len(results) == 1
        assert results[0]["status"] == "ok"

    def test_parallel_matches_serial(self, tmp_path):
        cfg = small_config()
        cfg.sweep = {"axes": {"seed": [1, 2]}}
        serial = run_sweep(cfg, tmp_path / "s", jobs=1)
        cfg2 = small_config()
        cfg2.sweep = {"axes": {"seed": [1, 2]}}
        parallel = run_sweep(cfg2, tmp_path / "p", jobs=2)
        for a, b in zip(serial, parallel):
            assert a["test_score"] == b["test_score"]
