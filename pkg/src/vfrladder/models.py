"""Quality/speed model pairs and their persistence.

A model file holds either a single forest over the full 7-feature vector or,
in per-preset mode, one forest per preset over the first six features.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .domain import EncodingRecord, Representation, SegmentFeatures
from .forest import FEATURE_NAMES, MODEL_VERSION, Forest, Hyperparams, design_matrix, train


class PresetForests:
    """One forest per preset; the preset is not part of the feature vector."""

    def __init__(self, forests: dict[int, Forest]):
        self.forests = dict(sorted(forests.items()))

    def to_dict(self) -> dict:
        return {"version": MODEL_VERSION, "kind": "per_preset",
                "forests": {str(p): f.to_dict() for p, f in self.forests.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "PresetForests":
        return cls({int(p): Forest.from_dict(f) for p, f in d["forests"].items()})


Model = Union[Forest, PresetForests]


def save_model(model: Model, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), separators=(",", ":")), encoding="utf-8")


def load_model(path) -> Model:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot load model {path}: {exc}") from exc
    if d.get("kind") == "per_preset":
        return PresetForests.from_dict(d)
    return Forest.from_dict(d)


def _predict(model: Model, X: np.ndarray) -> np.ndarray:
    if isinstance(model, Forest):
        return model.predict(X)
    out = np.empty(len(X))
    presets = X[:, 6].astype(int)
    for p in np.unique(presets):
        if p not in model.forests:
            raise KeyError(f"no model trained for preset {p}")
        rows = presets == p
        out[rows] = model.forests[p].predict(X[rows, :6])
    return out


class ForestOracle:
    """Trained quality and speed models behind the optimizer's oracle protocol.

    Predicted VMAF is clamped to [0, 100] and speed to >= 0.
    """

    def __init__(self, vmaf_model: Model, speed_model: Model):
        self.vmaf_model = vmaf_model
        self.speed_model = speed_model

    def _predict(self, X):
        v = np.clip(_predict(self.vmaf_model, X), 0.0, 100.0)
        s = np.maximum(_predict(self.speed_model, X), 0.0)
        return v, s

    def evaluate(self, features: SegmentFeatures, rep: Representation, framerate: float, preset: int):
        X = np.array([[*features.as_tuple(), rep.resolution_height, math.log(rep.target_bitrate),
                       framerate, preset]], dtype=np.float64)
        v, s = self._predict(X)
        return float(v[0]), float(s[0])

    def grid(self, features: SegmentFeatures, rep: Representation, framerates: Sequence[float],
             presets: Sequence[int]):
        ff, pp = np.meshgrid(np.asarray(framerates, dtype=float), np.asarray(presets, dtype=float),
                             indexing="ij")
        X = np.empty((ff.size, 7))
        X[:, :3] = features.as_tuple()
        X[:, 3] = rep.resolution_height
        X[:, 4] = math.log(rep.target_bitrate)
        X[:, 5] = ff.ravel()
        X[:, 6] = pp.ravel()
        v, s = self._predict(X)
        return v.reshape(ff.shape), s.reshape(ff.shape)


def train_models(records: Sequence[EncodingRecord], hp: Hyperparams = Hyperparams(),
                 per_preset: bool = False, threads: Optional[int] = 1) -> tuple[Model, Model]:
    """Fit the (VMAF, speed) model pair on encoding records."""
    if not records:
        raise ValueError("empty dataset")
    X = design_matrix(records)
    v = np.array([r.measured_vmaf for r in records])
    s = np.array([r.measured_speed for r in records])
    if not per_preset:
        return train(X, v, hp, threads=threads), train(X, s, hp, threads=threads)
    vm, sm = {}, {}
    names = FEATURE_NAMES[:6]
    for p in np.unique(X[:, 6]).astype(int):
        rows = X[:, 6] == p
        vm[int(p)] = train(X[rows, :6], v[rows], hp, names, threads)
        sm[int(p)] = train(X[rows, :6], s[rows], hp, names, threads)
    return PresetForests(vm), PresetForests(sm)
