"""JSON checkpoints shared by the salience scorer and the fusion block.

    {"kind": "salience" | "fusion", "meta": {...},
     "params": {name: {"shape": [...], "data": [row-major floats]}}}
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaError


def save_checkpoint(path, kind: str, params: dict, meta: dict | None = None) -> None:
    doc = {
        "kind": kind,
        "meta": meta or {},
        "params": {k: {"shape": list(np.shape(v)), "data": np.asarray(v, dtype=float).ravel().tolist()}
                   for k, v in params.items()},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_checkpoint(path, kind: str | None = None):
    """Returns (params, meta)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: {e}") from None
    if kind is not None and doc.get("kind") != kind:
        raise SchemaError(f"{path}: expected a {kind} checkpoint, found {doc.get('kind')!r}")
    params = {}
    for name, p in doc["params"].items():
        arr = np.asarray(p["data"], dtype=float)
        params[name] = arr.reshape(p["shape"])
    return params, doc.get("meta", {})
