"""Reading and writing parameter documents.

A parameter document is a flat JSON object naming the prior and its
hyperparameters, optionally followed by fit metadata::

    {"model": "sbsp", "sigma": 0.5, "c": 5.0, "beta": 1.0, "loglik": -12.3, "n": 50, "k": 40}
    {"model": "sbb", "theta": 2.0, "alpha": 0.5, "kappa": 1.0}
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .baselines import SBBParams
from .errors import DataError, DomainError
from .sbsp import SBSPParams

MODELS = {"sbsp": (SBSPParams, ("sigma", "c", "beta")), "sbb": (SBBParams, ("theta", "alpha", "kappa"))}


def params_from_dict(doc: dict) -> SBSPParams | SBBParams:
    """Build the parameter object named by ``doc["model"]``; extra keys are ignored."""
    if not isinstance(doc, dict):
        raise DataError("parameter document must be a JSON object")
    model = doc.get("model")
    if model not in MODELS:
        raise DataError(f"unknown model {model!r}; expected one of {sorted(MODELS)}")
    cls, keys = MODELS[model]
    values = []
    for key in keys:
        if key not in doc:
            raise DataError(f"parameter document lacks {key!r}")
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise DataError(f"{key!r} must be a finite number, got {v!r}")
        values.append(float(v))
    try:
        return cls(*values)
    except DomainError as exc:
        raise DataError(str(exc)) from exc


def loads_params(text: str) -> SBSPParams | SBBParams:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return params_from_dict(doc)


def read_params(path: str | Path) -> SBSPParams | SBBParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    return loads_params(text)


def dumps_params(params: SBSPParams | SBBParams, metadata: dict | None = None) -> str:
    doc = params.to_dict()
    if metadata:
        doc.update({k: v for k, v in metadata.items() if k not in doc})
    return json.dumps(doc, indent=2) + "\n"


def write_params(params: SBSPParams | SBBParams, path: str | Path, metadata: dict | None = None) -> None:
    Path(path).write_text(dumps_params(params, metadata), encoding="utf-8")
