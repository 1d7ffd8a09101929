"""Optimal subarchitecture extraction for BERT-style encoders."""

import json

from ._ose import (
    ArchParams,
    ConfigError,
    DataError,
    EmbeddingConfig,
    embedding_params,
    enumerate,
    flop_count,
    gelu,
    kd_loss,
    default_grid,
    param_count,
    rank_json,
    toy_forward,
    validate,
    verify,
    w_coefficient,
)


def rank(config="", overrides=(), measurements=None):
    """Runs an extraction and returns the report as a dict."""
    return json.loads(rank_json(config, list(overrides), measurements))


__all__ = [
    "ArchParams",
    "ConfigError",
    "DataError",
    "EmbeddingConfig",
    "embedding_params",
    "enumerate",
    "flop_count",
    "gelu",
    "kd_loss",
    "default_grid",
    "param_count",
    "rank",
    "rank_json",
    "toy_forward",
    "validate",
    "verify",
    "w_coefficient",
]
