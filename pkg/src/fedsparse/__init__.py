"""Federated training of exactly-sparse GLMs with probabilistic gates."""

__version__ = "0.1.0"
