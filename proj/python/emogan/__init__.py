"""Adversarial feature generators for emotion features, with training and metrics."""

import json

from ._core import (
    ConfigError,
    ContractError,
    Corpus,
    DegenerateDataError,
    DivergenceError,
    Error,
    Model,
    NumericalDomainError,
    ParseError,
    ShapeError,
    UnsupportedOperation,
    build_model,
    config_text,
    emotion_id,
    emotion_name,
    fid,
    fid_pipeline,
    load_csv,
    load_model,
    metric1,
    metric2,
    save_csv,
    toy_corpus,
    train,
    uwa,
)
from ._core import run_experiment as _run_experiment


def run_experiment(config_text, out=""):
    """Run a config (INI text) and return the manifest as a dict."""
    return json.loads(_run_experiment(config_text, str(out)))
