"""Random-forest regression for VMAF and encoding-speed prediction.

Trees are exact greedy CART regressors (sum-of-squared-error splits,
midpoint thresholds, ties broken by lowest feature index then lowest
threshold). Each tree draws its bootstrap sample and feature subsets from
an RNG stream derived from ``(seed, tree_index)``, so training with any
number of threads yields bit-identical forests.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import _cart
from .domain import EncodingRecord, Representation, SegmentFeatures

FEATURE_NAMES = ("E", "h", "L", "height", "log_bitrate", "framerate", "preset")
MODEL_VERSION = 1


def feature_vector(features: SegmentFeatures, rep: Representation, framerate: float,
                   preset: Optional[int] = None) -> np.ndarray:
    values = [features.energy_E, features.gradient_h, features.luminescence_L,
              float(rep.resolution_height), math.log(rep.target_bitrate), float(framerate)]
    if preset is not None:
        values.append(float(preset))
    return np.array(values)


def design_matrix(records: Sequence[EncodingRecord], with_preset: bool = True) -> np.ndarray:
    X = np.empty((len(records), 7 if with_preset else 6))
    for i, r in enumerate(records):
        f = r.features
        X[i, :6] = (f.energy_E, f.gradient_h, f.luminescence_L, r.representation.resolution_height,
                    math.log(r.representation.target_bitrate), r.framerate)
        if with_preset:
            X[i, 6] = r.preset
    return X


@dataclass(frozen=True)
class Hyperparams:
    n_estimators: int = 100
    max_depth: int = 14
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    bootstrap: bool = True
    features_per_split: Union[int, str] = "all"
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.features_per_split != "all" and int(self.features_per_split) < 1:
            raise ValueError("features_per_split must be >= 1 or 'all'")

    def mtry(self, n_features: int) -> int:
        if self.features_per_split == "all":
            return n_features
        return min(n_features, int(self.features_per_split))


@dataclass
class Tree:
    """Flat binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    sse: np.ndarray

    @classmethod
    def leaf(cls, value: float, n: int = 1) -> "Tree":
        return cls(np.array([-1], np.int32), np.zeros(1), np.array([-1], np.int32),
                   np.array([-1], np.int32), np.array([float(value)]), np.array([n]), np.zeros(1))

    def __len__(self):
        return len(self.feature)

    def predict_one(self, x) -> float:
        node = 0
        while self.feature[node] != _cart.LEAF:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return float(self.value[node])

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] != _cart.LEAF:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return best

    def impurity_decrease(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        for node in np.flatnonzero(self.feature != _cart.LEAF):
            gain = self.sse[node] - self.sse[self.left[node]] - self.sse[self.right[node]]
            out[self.feature[node]] += gain
        return out

    NODE_FIELDS = ("feature", "threshold", "left", "right", "value", "n", "sse")

    def to_dict(self) -> dict:
        """Nodes as ``[feature, threshold, left, right, value, n, sse]`` lists."""
        nodes = [
            [int(f), float(t), int(l), int(r), float(v), int(n), float(e)]
            for f, t, l, r, v, n, e in zip(self.feature, self.threshold, self.left, self.right,
                                           self.value, self.n_samples, self.sse)
        ]
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        cols = list(zip(*d["nodes"]))
        dtypes = (np.int32, np.float64, np.int32, np.int32, np.float64, np.int64, np.float64)
        return cls(*(np.array(c, dtype=dt) for c, dt in zip(cols, dtypes)))


class Forest:
    """An ensemble of regression trees; prediction is the mean of tree outputs."""

    def __init__(self, trees: list[Tree], hyperparams: Hyperparams,
                 feature_names: Sequence[str] = FEATURE_NAMES):
        self.trees = list(trees)
        self.hyperparams = hyperparams
        self.feature_names = list(feature_names)
        self._packed = None

    def _pack(self):
        if self._packed is None:
            offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
            offsets[1:] = np.cumsum([len(t) for t in self.trees])
            cat = lambda attr: np.concatenate([getattr(t, attr) for t in self.trees])  # noqa: E731
            self._packed = (cat("feature").astype(np.int32), cat("threshold"),
                            cat("left").astype(np.int32), cat("right").astype(np.int32),
                            cat("value"), offsets)
        return self._packed

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        return _cart.predict_forest(*self._pack(), X)

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=np.float64)[None, :])[0])

    def feature_importance(self) -> dict[str, float]:
        """Sample-weighted SSE decrease per feature, normalised to sum to 1."""
        total = np.zeros(len(self.feature_names))
        for t in self.trees:
            total += t.impurity_decrease(len(self.feature_names))
        s = total.sum()
        if s > 0:
            total = total / s
        return dict(zip(self.feature_names, total.tolist()))

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "feature_names": self.feature_names,
            "hyperparams": asdict(self.hyperparams),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Forest":
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        return cls([Tree.from_dict(t) for t in d["trees"]], Hyperparams(**d["hyperparams"]),
                   d["feature_names"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def loads(cls, s: str) -> "Forest":
        return cls.from_dict(json.loads(s))


def _bin_features(X: np.ndarray):
    n, F = X.shape
    uniques = [np.unique(X[:, f]) for f in range(F)]
    nbins = np.array([len(u) for u in uniques], dtype=np.int64)
    uniq = np.zeros((F, int(nbins.max())))
    codes = np.empty((n, F), dtype=np.int64)
    for f, u in enumerate(uniques):
        uniq[f, : len(u)] = u
        codes[:, f] = np.searchsorted(u, X[:, f])
    return codes, uniq, nbins


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), tree_index]))


def train(X, y, hp: Hyperparams = Hyperparams(), feature_names: Sequence[str] = FEATURE_NAMES,
          threads: Optional[int] = 1) -> Forest:
    """Fit a forest on rows of `X` and targets `y`.

    `threads` spreads trees across worker threads (None = all cores); the
    result does not depend on it.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("empty dataset")
    if len(y) != len(X):
        raise ValueError("X and y lengths differ")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("features and targets must be finite")
    if X.shape[1] != len(feature_names):
        raise ValueError(f"expected {len(feature_names)} features, got {X.shape[1]}")
    codes, uniq, nbins = _bin_features(X)
    n = len(X)
    mtry = hp.mtry(X.shape[1])

    def fit_one(t: int) -> Tree:
        rng = tree_rng(hp.seed, t)
        sample = rng.integers(0, n, n) if hp.bootstrap else np.arange(n)
        sample.sort()
        seed = np.uint64(rng.integers(0, 2**63))
        arrays = _cart.build_tree(codes, uniq, nbins, y, sample.astype(np.int64), hp.max_depth,
                                  hp.min_samples_split, hp.min_samples_leaf, mtry, seed)
        return Tree(*arrays)

    if threads == 1:
        trees = [fit_one(t) for t in range(hp.n_estimators)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(fit_one, range(hp.n_estimators)))
    return Forest(trees, hp, feature_names)


def train_rows(rows: Iterable[tuple[Sequence[float], float]], hp: Hyperparams = Hyperparams(),
               **kwargs) -> Forest:
    rows = list(rows)
    if not rows:
        raise ValueError("empty dataset")
    X = np.array([r[0] for r in rows], dtype=np.float64)
    y = np.array([r[1] for r in rows], dtype=np.float64)
    return train(X, y, hp, **kwargs)


def r2_score(y, y_hat) -> float:
    """Coefficient of determination; 1 when both SS are zero, 0 when only SStot is."""
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    ss_res = float(np.sum((y - y_hat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def mean_absolute_error(y, y_hat) -> float:
    return float(np.mean(np.abs(np.asarray(y, dtype=np.float64) - np.asarray(y_hat, dtype=np.float64))))


def sequence_of(segment_id: str) -> str:
    """Source-sequence key: the id up to its last ``_s<digits>`` suffix, if any."""
    head, sep, tail = segment_id.rpartition("_s")
    return head if sep and tail.isdigit() else segment_id


@dataclass
class CVResult:
    r2: list[float] = field(default_factory=list)
    mae: list[float] = field(default_factory=list)
    test_groups: list[list[str]] = field(default_factory=list)

    @property
    def mean_r2(self) -> float:
        return float(np.mean(self.r2))

    @property
    def mean_mae(self) -> float:
        return float(np.mean(self.mae))


def group_folds(groups: Sequence[str], k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Assign each distinct group to exactly one of `k` test folds; returns row masks."""
    groups = np.asarray(groups)
    distinct = sorted(set(groups.tolist()))
    if len(distinct) < k:
        raise ValueError(f"need at least {k} distinct groups, got {len(distinct)}")
    order = np.random.default_rng(seed).permutation(len(distinct))
    fold_of = {distinct[g]: i % k for i, g in enumerate(order)}
    assigned = np.array([fold_of[g] for g in groups.tolist()])
    return [assigned == i for i in range(k)]


def cross_validate(X, y, groups: Sequence[str], hp: Hyperparams = Hyperparams(), k: int = 5,
                   group_by: Union[str, Callable[[str], str]] = "segment_id",
                   feature_names: Sequence[str] = FEATURE_NAMES, threads: Optional[int] = 1) -> CVResult:
    """Grouped k-fold cross-validation.

    `groups` holds the segment id of each row. With ``group_by="sequence"``
    segments of the same source sequence share a fold; a callable maps ids
    to group keys directly.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if group_by == "segment_id":
        keys = list(groups)
    elif group_by == "sequence":
        keys = [sequence_of(g) for g in groups]
    else:
        keys = [group_by(g) for g in groups]
    result = CVResult()
    keys_arr = np.asarray(keys)
    for test in group_folds(keys, k, hp.seed):
        forest = train(X[~test], y[~test], hp, feature_names, threads)
        pred = forest.predict(X[test])
        result.r2.append(r2_score(y[test], pred))
        result.mae.append(mean_absolute_error(y[test], pred))
        result.test_groups.append(sorted(set(keys_arr[test].tolist())))
    return result
