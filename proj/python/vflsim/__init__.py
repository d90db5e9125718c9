"""Python bindings for the vflsim two-party vertical federated learning simulator."""

import json
import os

from ._vflsim import (
    CacheError,
    CheckpointError,
    Config,
    ConfigError,
    DataError,
    DivergenceError,
    IoError,
    NumericError,
    ProtocolError,
    SchemaError,
    ShapeError,
    VflError,
    VocabError,
    audit_transcript,
    auc,
    gen_data,
    hash_feature,
    logloss,
    paired_ttest,
    sweep,
    train,
)
from ._vflsim import evaluate_json as _evaluate_json

__all__ = [
    "CacheError",
    "CheckpointError",
    "Config",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "IoError",
    "NumericError",
    "ProtocolError",
    "SchemaError",
    "ShapeError",
    "VflError",
    "VocabError",
    "audit_transcript",
    "auc",
    "evaluate",
    "gen_data",
    "hash_feature",
    "logloss",
    "paired_ttest",
    "sweep",
    "train",
]


def evaluate(config, checkpoint, out):
    """Score the test split with a checkpoint and return the sliced report as a dict."""
    return json.loads(_evaluate_json(config, os.fspath(checkpoint), os.fspath(out)))
