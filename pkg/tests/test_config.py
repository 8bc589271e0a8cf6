import pytest

from fedsparse.config import (
    ConfigError,
    DatasetConfig,
    PartitionConfig,
    apply_overrides,
    config_from_dict,
    load_config,
)

MINIMAL = {"algorithm": {"name": "flops", "epochs": 3, "batch_size": 16}}


class TestConfigFromDict:
    def test_minimal(self):
        cfg = config_from_dict(MINIMAL)
        assert cfg.algorithm.algorithm == "flops"
        assert cfg.algorithm.epochs == 3
        assert cfg.seed == 0
        assert cfg.dataset.kind == "synthetic"
        assert cfg.partition.clients == 100

    def test_name_alias_for_algorithm(self):
        cfg = config_from_dict({"algorithm": {"algorithm": "fedavg", "epochs": 1, "batch_size": 8}})
        assert cfg.algorithm.algorithm == "fedavg"

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown top-level"):
            config_from_dict({**MINIMAL, "banana": 1})

    def test_unknown_block_key(self):
        with pytest.raises(ConfigError, match="dataset"):
            config_from_dict({**MINIMAL, "dataset": {"flavor": "salt"}})

    def test_missing_algorithm_name(self):
        with pytest.raises(ConfigError, match="algorithm.name"):
            config_from_dict({"algorithm": {"epochs": 1, "batch_size": 8}})

    def test_non_mapping_root(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2])

    def test_full_round_trip(self):
        raw = {
            "seed": 7,
            "output_dir": "runs/x",
            "dataset": {"kind": "synthetic", "task": "lg", "n": 500, "p": 50},
            "partition": {"clients": 10, "mode": "label_skew", "alpha_iid": 0.5},
            "algorithm": {"name": "flops_pa", "epochs": 4, "batch_size": 8, "rho_targ": 0.1},
        }
        cfg = config_from_dict(raw)
        d = cfg.to_dict()
        assert d["schema_version"] == 1
        assert d["seed"] == 7
        assert d["partition"]["mode"] == "label_skew"
        assert d["algorithm"]["rho_targ"] == 0.1
        # to_dict output is itself loadable
        d2 = dict(d)
        d2.pop("schema_version")
        cfg2 = config_from_dict(d2)
        assert cfg2.algorithm.rho_targ == 0.1


class TestDatasetConfig:
    def test_kind_requirements(self):
        with pytest.raises(ConfigError):
            DatasetConfig(kind="libsvm")
        with pytest.raises(ConfigError):
            DatasetConfig(kind="idx", images_path="x")
        with pytest.raises(ConfigError):
            DatasetConfig(kind="cached")

    def test_bad_task(self):
        with pytest.raises(ConfigError):
            DatasetConfig(task="regression")

    def test_resolve_path_env_root(self, tmp_path, monkeypatch):
        (tmp_path / "data.bin").write_bytes(b"x")
        ds = DatasetConfig(kind="cached", path="data.bin")
        monkeypatch.setenv("FEDSPARSE_DATA_ROOT", str(tmp_path))
        assert ds.resolve_path("data.bin") == tmp_path / "data.bin"

    def test_resolve_missing_path(self, monkeypatch):
        monkeypatch.delenv("FEDSPARSE_DATA_ROOT", raising=False)
        ds = DatasetConfig()
        with pytest.raises(ConfigError, match="not found"):
            ds.resolve_path("/no/such/file")


class TestPartitionConfig:
    def test_heterogeneity_bridge(self):
        p = PartitionConfig(clients=5, mode="quantity_skew", alpha_iid=2.0, sigma_ms=0.5)
        het = p.heterogeneity
        assert het.mode == "quantity_skew"
        assert het.alpha_iid == 2.0
        assert het.sigma_ms == 0.5

    def test_invalid_mode_becomes_config_error(self):
        with pytest.raises(ConfigError):
            PartitionConfig(mode="sideways")

    def test_client_count(self):
        with pytest.raises(ConfigError):
            PartitionConfig(clients=0)


class TestLoadConfig:
    def test_yaml_file(self, tmp_path):
        f = tmp_path / "c.yaml"
        f.write_text(
            "seed: 3\nalgorithm:\n  name: fedavg\n  epochs: 2\n  batch_size: 4\n"
        )
        cfg = load_config(f)
        assert cfg.seed == 3
        assert cfg.algorithm.algorithm == "fedavg"

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/no/such/config.yaml")

    def test_invalid_yaml(self, tmp_path):
        f = tmp_path / "c.yaml"
        f.write_text("algorithm: [unterminated")
        with pytest.raises(ConfigError, match="YAML"):
            load_config(f)


class TestApplyOverrides:
    def test_dotted_paths(self):
        raw = {"algorithm": {"eta_theta": 0.01}, "seed": 0}
        out = apply_overrides(raw, {"algorithm.eta_theta": 0.1, "seed": 5})
        assert out["algorithm"]["eta_theta"] == 0.1
        assert out["seed"] == 5
        assert raw["algorithm"]["eta_theta"] == 0.01  # original untouched

    def test_creates_missing_levels(self):
        out = apply_overrides({}, {"dataset.n": 100})
        assert out["dataset"]["n"] == 100

    def test_non_mapping_intermediate(self):
        with pytest.raises(ConfigError):
            apply_overrides({"dataset": 3}, {"dataset.n": 100})
