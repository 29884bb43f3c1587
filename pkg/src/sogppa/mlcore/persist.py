"""Versioned, checksummed JSON model files."""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .ensemble import BoostedModel, ForestModel
from .tree import DecisionTree, TrainConfig

FORMAT_VERSION = 1


class ModelFileError(ValueError):
    """Unreadable, corrupted or incompatible model file."""


def _tree_to_dict(t: DecisionTree) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
    }


def _tree_from_dict(d: dict, n_features: int) -> DecisionTree:
    return DecisionTree(
        feature=np.asarray(d["feature"], dtype=np.int64),
        threshold=np.asarray(d["threshold"], dtype=float),
        left=np.asarray(d["left"], dtype=np.int64),
        right=np.asarray(d["right"], dtype=np.int64),
        value=np.asarray(d["value"], dtype=float),
        n_features=n_features,
    )


def model_to_dict(model, meta: dict | None = None) -> dict:
    if isinstance(model, DecisionTree):
        return {"kind": "tree", "n_features": model.n_features, "config": None,
                "trees": [_tree_to_dict(model)], "meta": meta or {}}
    body = {
        "kind": model.kind,
        "n_features": model.n_features,
        "config": model.config.to_dict(),
        "trees": [_tree_to_dict(t) for t in model.trees],
        "meta": meta or {},
    }
    if isinstance(model, BoostedModel):
        body["base_score"] = model.base_score
        body["loss_history"] = model.loss_history
    else:
        body["oob_r"] = None if np.isnan(model.oob_r) else model.oob_r
    return body


def _digest(body: dict) -> str:
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def model_from_dict(body: dict):
    n = int(body["n_features"])
    trees = [_tree_from_dict(t, n) for t in body["trees"]]
    if body["kind"] == "tree":
        if len(trees) != 1:
            raise ModelFileError("a tree model file holds exactly one tree")
        return trees[0]
    cfg = TrainConfig(**body["config"])
    if body["kind"] == "gbt":
        return BoostedModel(trees, n, cfg, float(body["base_score"]), list(body.get("loss_history", [])))
    if body["kind"] == "forest":
        oob = body.get("oob_r")
        return ForestModel(trees, n, cfg, float("nan") if oob is None else float(oob))
    raise ModelFileError(f"unknown model kind {body['kind']!r}")


def dumps_model(model, meta: dict | None = None) -> str:
    body = model_to_dict(model, meta)
    return json.dumps({"version": FORMAT_VERSION, "sha256": _digest(body), "model": body})


def loads_model(text: str):
    """Parse a model file; returns ``(model, meta)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFileError(f"malformed model file: {e}") from None
    if not isinstance(doc, dict) or "model" not in doc:
        raise ModelFileError("not a model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFileError(f"unsupported model format version {doc.get('version')!r}")
    body = doc["model"]
    if doc.get("sha256") != _digest(body):
        raise ModelFileError("checksum mismatch: model file is corrupted")
    try:
        return model_from_dict(body), body.get("meta", {})
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"invalid model body: {e}") from None


def save_model(model, path, meta: dict | None = None) -> None:
    with open(path, "w") as f:
        f.write(dumps_model(model, meta))


def load_model(path):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ModelFileError(f"cannot read model file {path}: {e}") from None
    return loads_model(text)
