"""Versioned JSON serialization of fitted models.

Floats are written with ``repr`` precision, so a save/load round trip
reproduces predictions bit for bit.
"""

import json

import numpy as np

from .errors import ModelFormatError
from .hierarchical import HighLevelPolicy, HlsvrModel
from .lssvr import KernelParams, LssvrModel

FORMAT_TAG = "hlsvr-model"
FORMAT_VERSION = 1


def lssvr_to_dict(model):
    return {
        "support_inputs": model.support_inputs.tolist(),
        "alphas": model.alphas.tolist(),
        "bias": model.bias,
        "theta": model.kernel.theta,
        "gamma": model.gamma,
        "lower": model.lower.tolist(),
        "upper": model.upper.tolist(),
    }


def lssvr_from_dict(d):
    return LssvrModel(np.array(d["support_inputs"], dtype=np.float64), np.array(d["alphas"]),
                      float(d["bias"]), KernelParams(d["theta"]), float(d["gamma"]),
                      np.array(d["lower"]), np.array(d["upper"]))


def model_to_dict(model, **meta):
    return {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "anchors": model.anchors.tolist(),
        "bounds_s": [list(b) for b in model.bounds_s],
        "bounds_l": [list(b) for b in model.bounds_l],
        "high_policy": {"gamma": model.high_policy.gamma, "theta": model.high_policy.theta},
        "low_models": [lssvr_to_dict(m) for m in model.low_models],
        "low_tuning": [list(t) for t in model.low_tuning],
        "meta": meta,
    }


def model_from_dict(d):
    if not isinstance(d, dict) or d.get("format") != FORMAT_TAG:
        raise ModelFormatError("not an HL-SVR model file")
    if d.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {d.get('version')!r}, "
                               f"expected {FORMAT_VERSION}")
    try:
        hp = d["high_policy"]
        return HlsvrModel(
            np.array(d["anchors"], dtype=np.float64),
            [lssvr_from_dict(m) for m in d["low_models"]],
            HighLevelPolicy(float(hp["gamma"]), None if hp["theta"] is None else float(hp["theta"])),
            tuple(map(tuple, d["bounds_s"])),
            tuple(map(tuple, d["bounds_l"])),
            tuple(map(tuple, d.get("low_tuning", ()))),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def save_model(model, path, **meta):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, **meta), fh)
        fh.write("\n")


def load_model(path):
    """Return ``(model, meta)``."""
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    model = model_from_dict(d)
    return model, d.get("meta", {})
