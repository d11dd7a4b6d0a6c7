"""Python bindings for the cleer EEG contrastive-learning core."""

import json as _json

from . import _cleer
from ._cleer import (
    ConfigError,
    ContractError,
    DimensionError,
    Error,
    FormatError,
    StratificationError,
    average_reference,
    bandpass,
    dcl_loss,
    gradcheck,
    hcl_loss,
    hierarchy_levels,
    icl_loss,
    load_segments,
    make_synthetic_dataset,
    notch,
    sample_crop_pairs,
    sample_masks,
    save_segments,
    tcl_loss,
    window_count,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DimensionError",
    "Error",
    "FormatError",
    "StratificationError",
    "average_reference",
    "bandpass",
    "dcl_loss",
    "default_train_config",
    "gradcheck",
    "hcl_loss",
    "hierarchy_levels",
    "icl_loss",
    "load_segments",
    "make_synthetic_dataset",
    "notch",
    "per_channel_eval",
    "run_skcv",
    "sample_crop_pairs",
    "sample_masks",
    "save_segments",
    "tcl_loss",
    "window_count",
]


def default_train_config():
    """TrainConfig defaults as a dict."""
    return _json.loads(_cleer.default_train_config())


def run_skcv(data, labels, config=None):
    """Stratified k-fold training. `config` overlays the defaults; returns the report dict."""
    return _json.loads(_cleer.run_skcv(data, labels, _json.dumps(config or {})))


def per_channel_eval(data, labels, config=None, method="retrain"):
    """Ranked per-channel accuracy as a list of (channel_index, channel_name, mean_accuracy)."""
    csv = _cleer.per_channel_eval(data, labels, _json.dumps(config or {}), method)
    rows = []
    for line in csv.strip().splitlines()[1:]:
        idx, name, acc = line.split(",")
        rows.append((int(idx), name, float(acc)))
    return rows
