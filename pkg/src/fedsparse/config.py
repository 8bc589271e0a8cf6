"""Experiment configuration: YAML parsing, defaults, validation.

The config file is a key-value tree with four blocks: dataset, partition,
algorithm, and an optional sweep grid. See configs/example.yaml for a
fully annotated example.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .federation import ALGORITHMS, FederationConfig
from .partition import IID, HeterogeneityConfig

DATA_ROOT_ENV = "FEDSPARSE_DATA_ROOT"

SCHEMA_VERSION = 1

_DATASET_KINDS = ("synthetic", "libsvm", "idx", "cached")
_TASKS = ("lr", "lg", "mc", "mlc")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class DatasetConfig:
    kind: str = "synthetic"
    task: str = "lr"
    # synthetic block
    n: int = 10000
    p: int = 1000
    rho_true: float = 0.05
    rho_cor: float = 0.2
    snr: float = 20.0
    n_classes: int = 5
    # real-data block
    path: str | None = None
    images_path: str | None = None
    labels_path: str | None = None
    test_path: str | None = None
    test_images_path: str | None = None
    test_labels_path: str | None = None
    zero_based: bool = False
    dim: int | None = None
    top_labels: int | None = None
    # shared
    test_fraction: float = 0.2
    add_bias: bool = False

    def __post_init__(self):
        if self.kind not in _DATASET_KINDS:
            raise ConfigError(f"dataset.kind must be one of {_DATASET_KINDS}, got {self.kind!r}")
        if self.task not in _TASKS:
            raise ConfigError(f"dataset.task must be one of {_TASKS}, got {self.task!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("dataset.test_fraction must lie in (0, 1)")
        if self.kind == "libsvm" and self.path is None:
            raise ConfigError("dataset.kind=libsvm requires dataset.path")
        if self.kind == "cached" and self.path is None:
            raise ConfigError("dataset.kind=cached requires dataset.path")
        if self.kind == "idx" and (self.images_path is None or self.labels_path is None):
            raise ConfigError("dataset.kind=idx requires images_path and labels_path")

    def resolve_path(self, p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(p)
        if not path.is_absolute():
            root = os.environ.get(DATA_ROOT_ENV)
            if root:
                path = Path(root) / path
        if not path.exists():
            raise ConfigError(f"dataset file not found: {path}")
        return path


@dataclass
class PartitionConfig:
    clients: int = 100
    mode: str = IID
    alpha_iid: float = 1000.0
    sigma_ms: float = 0.0

    def __post_init__(self):
        if self.clients < 1:
            raise ConfigError("partition.clients must be >= 1")
        try:
            self.heterogeneity  # validate via HeterogeneityConfig
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def heterogeneity(self) -> HeterogeneityConfig:
        return HeterogeneityConfig(mode=self.mode, alpha_iid=self.alpha_iid, sigma_ms=self.sigma_ms)


@dataclass
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/experiment"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    algorithm: FederationConfig = field(default_factory=lambda: FederationConfig("flops", 10, 32))
    sweep: dict | None = None  # {"axes": {dotted.key: [values]}}

    def to_dict(self) -> dict:
        import dataclasses as dc

        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "dataset": dc.asdict(self.dataset),
            "partition": dc.asdict(self.partition),
            "algorithm": dc.asdict(self.algorithm),
            "sweep": self.sweep,
        }


def _build(cls, block: dict, name: str):
    import dataclasses as dc

    known = {f.name for f in dc.fields(cls)}
    unknown = set(block) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name} block: {sorted(unknown)}")
    try:
        return cls(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} block: {exc}") from None


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    known = {"schema_version", "seed", "output_dir", "dataset", "partition", "algorithm", "sweep"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    algo_block = dict(raw.get("algorithm", {}))
    if "name" in algo_block:
        algo_block["algorithm"] = algo_block.pop("name")
    if algo_block.get("algorithm") not in ALGORITHMS:
        raise ConfigError(f"algorithm.name must be one of {ALGORITHMS}")
    return ExperimentConfig(
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "runs/experiment")),
        dataset=_build(DatasetConfig, dict(raw.get("dataset", {})), "dataset"),
        partition=_build(PartitionConfig, dict(raw.get("partition", {})), "partition"),
        algorithm=_build(FederationConfig, algo_block, "algorithm"),
        sweep=raw.get("sweep"),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with path.open("r") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return config_from_dict(raw or {})


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Set dotted-path keys (e.g. 'algorithm.eta_theta') in a nested dict copy."""
    import copy

    out = copy.deepcopy(raw)
    for dotted, value in overrides.items():
        node = out
        parts = dotted.split(".")
        for key in parts[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {dotted}: {key} is not a mapping")
        node[parts[-1]] = value
    return out
