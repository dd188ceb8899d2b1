import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import naive_cart, naive_cart_predict, traverse_tree
from vfrladder import synthetic
from vfrladder.domain import Representation, SegmentFeatures, default_config
from vfrladder.forest import (FEATURE_NAMES, Forest, Hyperparams, Tree, cross_validate, design_matrix,
                              feature_vector, group_folds, mean_absolute_error, r2_score, sequence_of,
                              train, train_rows)

SINGLE = dict(n_estimators=1, bootstrap=False)


@pytest.fixture(scope="module")
def synth_small():
    recs = synthetic.generate_dataset(synthetic.SurfaceParams(), 6, default_config(), seed=11)
    X = design_matrix(recs)
    return recs, X, np.array([r.measured_vmaf for r in recs])


def test_feature_vector_layout():
    fv = feature_vector(SegmentFeatures(1.0, 2.0, 3.0), Representation(360, 365_000), 15.0, 4)
    assert fv.tolist() == [1.0, 2.0, 3.0, 360.0, math.log(365_000), 15.0, 4.0]
    assert FEATURE_NAMES == ("E", "h", "L", "height", "log_bitrate", "framerate", "preset")


def test_three_rows_overfit_exactly():
    X = np.array([[0.0, 1, 2, 3, 4, 5, 6], [1, 1, 2, 3, 4, 5, 6], [2, 0, 2, 3, 4, 5, 6]])
    y = np.array([3.0, -1.0, 7.5])
    f = train(X, y, Hyperparams(max_depth=14, **SINGLE))
    assert f.predict(X).tolist() == y.tolist()


def test_constant_target():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 7))
    f = train(X, np.full(50, 4.25), Hyperparams(n_estimators=5))
    assert np.all(f.predict(rng.normal(size=(20, 7))) == 4.25)
    assert all(len(t) == 1 for t in f.trees)


def test_leaf_forest_and_ensemble_mean():
    hp = Hyperparams()
    assert Forest([Tree.leaf(42.0)], hp).predict_one(np.zeros(7)) == 42.0
    assert Forest([Tree.leaf(10.0), Tree.leaf(20.0)], hp).predict_one(np.ones(7)) == 15.0


def test_manual_traversal_matches_compiled_prediction(synth_small):
    _, X, y = synth_small
    forest = train(X, y, Hyperparams(n_estimators=10, seed=3))
    d = forest.to_dict()
    rng = np.random.default_rng(9)
    lo, hi = X.min(axis=0), X.max(axis=0)
    for x in rng.uniform(lo, hi, size=(50, 7)):
        manual = sum(traverse_tree(t, x) for t in d["trees"]) / len(d["trees"])
        assert forest.predict_one(x) == pytest.approx(manual, rel=1e-12, abs=1e-12)
        assert forest.trees[0].predict_one(x) == traverse_tree(d["trees"][0], x)


@settings(suppress_health_check=[HealthCheck.too_slow], max_examples=60)
@given(X=arrays(np.float64, st.tuples(st.integers(2, 25), st.just(3)),
                elements=st.integers(0, 6).map(float)),
       seed=st.integers(0, 2**31), depth=st.integers(1, 5), leaf=st.integers(1, 3))
def test_single_tree_matches_naive_cart(X, seed, depth, leaf):
    y = np.random.default_rng(seed).normal(size=len(X))
    names = ("a", "b", "c")
    f = train(X, y, Hyperparams(max_depth=depth, min_samples_leaf=leaf, **SINGLE), names)
    ref = naive_cart(X, y, depth, 2, leaf)
    probe = np.vstack([X, np.random.default_rng(seed + 1).uniform(-1, 7, size=(10, 3))])
    for x in probe:
        assert f.predict_one(x) == pytest.approx(naive_cart_predict(ref, x), rel=1e-9, abs=1e-9)


def test_tie_break_lowest_feature_then_threshold():
    # columns 0 and 1 are identical; y = [0, 1, 0] gives equal gain at both midpoints
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    tree = train(X, np.array([0.0, 1.0, 0.0]), Hyperparams(max_depth=1, **SINGLE), ("a", "b")).trees[0]
    assert tree.feature[0] == 0 and tree.threshold[0] == 0.5


def test_adjacent_float_threshold_routes_consistently():
    a = 1.0
    b = np.nextafter(a, 2.0)
    X = np.array([[a], [b]])
    f = train(X, np.array([0.0, 1.0]), Hyperparams(**SINGLE), ("x",))
    assert f.predict(X).tolist() == [0.0, 1.0]


def test_structure_respects_hyperparameters(synth_small):
    _, X, y = synth_small
    hp = Hyperparams(n_estimators=5, max_depth=6, min_samples_leaf=7, min_samples_split=20, seed=2)
    for t in train(X, y, hp).trees:
        assert t.depth() <= 6
        leaves = t.feature == -1
        assert t.n_samples[leaves].min() >= 7
        internal = ~leaves
        assert np.all(t.n_samples[internal] >= 20)
        assert np.all(t.n_samples[internal] == t.n_samples[t.left[internal]] + t.n_samples[t.right[internal]])


@settings(max_examples=30)
@given(X=arrays(np.float64, st.tuples(st.integers(1, 40), st.just(7)), elements=st.floats(-1e3, 1e3)),
       y_seed=st.integers(0, 1000))
def test_predictions_within_target_range(X, y_seed):
    y = np.random.default_rng(y_seed).uniform(-50, 80, size=len(X))
    f = train(X, y, Hyperparams(n_estimators=3, seed=y_seed))
    probe = np.random.default_rng(y_seed).uniform(-2e3, 2e3, size=(20, 7))
    p = f.predict(probe)
    assert np.all(p >= y.min() - 1e-9) and np.all(p <= y.max() + 1e-9)
    for t in f.trees:
        assert np.all((t.value >= y.min() - 1e-9) & (t.value <= y.max() + 1e-9))


def test_importance_of_leaf_forest_is_zero():
    imp = Forest([Tree.leaf(1.0)], Hyperparams()).feature_importance()
    assert imp == {n: 0.0 for n in FEATURE_NAMES}


def test_importance_single_factor():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(400, 7))
    y = 10 * X[:, 0] ** 2
    imp = train(X, y, Hyperparams(n_estimators=20)).feature_importance()
    assert imp["E"] > 0.9
    assert sum(imp.values()) == pytest.approx(1.0, abs=1e-9)


def test_training_fit_on_synthetic_500_rows():
    recs = synthetic.generate_dataset(synthetic.SurfaceParams(), 2, default_config(), seed=4)[:500]
    X = design_matrix(recs)
    y = np.array([r.measured_vmaf for r in recs])
    f = train(X, y, Hyperparams())
    assert len(recs) == 500
    assert r2_score(y, f.predict(X)) >= 0.95


def test_threads_do_not_change_forest(synth_small):
    _, X, y = synth_small
    hp = Hyperparams(n_estimators=8, features_per_split=3, seed=123)
    a, b, c = (train(X, y, hp, threads=t).dumps() for t in (1, 2, 5))
    assert a == b == c
    assert train(X, y, Hyperparams(n_estimators=8, features_per_split=3, seed=124)).dumps() != a


def test_json_round_trip(synth_small, tmp_path):
    _, X, y = synth_small
    f = train(X, y, Hyperparams(n_estimators=4, seed=1))
    text = f.dumps()
    g = Forest.loads(text)
    assert g.dumps() == text
    assert np.array_equal(g.predict(X), f.predict(X))
    doc = json.loads(text)
    assert set(doc) == {"version", "feature_names", "hyperparams", "trees"}
    assert all("nodes" in t for t in doc["trees"])
    doc["version"] = 99
    with pytest.raises(ValueError, match="version"):
        Forest.from_dict(doc)


def test_train_rows_form():
    f = train_rows([([0.0] * 7, 1.0), ([1.0] * 7, 3.0)], Hyperparams(**SINGLE))
    assert f.predict_one([1.0] * 7) == 3.0


@pytest.mark.parametrize("X, y, msg", [(np.empty((0, 7)), np.empty(0), "empty"),
                                       (np.array([[np.nan] * 7]), np.array([1.0]), "finite"),
                                       (np.zeros((2, 7)), np.array([1.0, np.inf]), "finite")])
def test_training_errors(X, y, msg):
    with pytest.raises(ValueError, match=msg):
        train(X, y)
    with pytest.raises(ValueError, match="features"):
        Forest([Tree.leaf(0.0)], Hyperparams()).predict(np.zeros((1, 3)))


@pytest.mark.parametrize("kwargs", [dict(n_estimators=0), dict(max_depth=0), dict(min_samples_split=1),
                                    dict(min_samples_leaf=0), dict(features_per_split=0)])
def test_hyperparameter_validation(kwargs):
    with pytest.raises(ValueError):
        Hyperparams(**kwargs)


def test_scores():
    assert r2_score([1, 2, 3], [1, 2, 3]) == 1.0
    assert r2_score([2, 2], [2, 2]) == 1.0
    assert r2_score([2, 2], [1, 2]) == 0.0
    assert r2_score([1, 2, 3], [2, 2, 2]) == 0.0
    assert mean_absolute_error([1, 2], [2, 4]) == 1.5


def test_sequence_keys():
    assert sequence_of("park_s003") == "park"
    assert sequence_of("a_b_s12") == "a_b"
    assert sequence_of("syn00001") == "syn00001"
    assert sequence_of("x_sfoo") == "x_sfoo"


def test_cross_validation_perfect_predictor():
    rng = np.random.default_rng(1)
    y = rng.uniform(0, 100, 200)
    X = np.column_stack([y, rng.normal(size=(200, 6))])
    groups = [f"g{i % 20}" for i in range(200)]
    res = cross_validate(X, y, groups, Hyperparams(n_estimators=5), k=5)
    assert len(res.r2) == 5
    assert res.mean_r2 > 0.99 and res.mean_mae < 2.0


def test_cross_validation_constant_target():
    X = np.random.default_rng(2).normal(size=(50, 7))
    res = cross_validate(X, np.full(50, 3.0), [f"g{i % 10}" for i in range(50)], Hyperparams(n_estimators=2))
    assert res.mae == [0.0] * 5 and res.r2 == [1.0] * 5


def test_fold_audit_by_sequence():
    groups = [f"seq{q}_s{k:03d}" for q in range(5) for k in range(4) for _ in range(6)]
    X = np.random.default_rng(3).normal(size=(len(groups), 7))
    y = X[:, 0]
    res = cross_validate(X, y, groups, Hyperparams(n_estimators=2), k=5, group_by="sequence")
    seqs = [sequence_of(g) for g in groups]
    seen = []
    for test_groups, mask in zip(res.test_groups, group_folds(seqs, 5, 0)):
        train_seqs = {s for s, m in zip(seqs, mask) if not m}
        assert not train_seqs & set(test_groups)
        seen += test_groups
    assert sorted(seen) == [f"seq{q}" for q in range(5)]


def test_every_group_tested_once():
    groups = [f"g{i}" for i in range(23) for _ in range(3)]
    masks = group_folds(groups, 5, seed=7)
    assert np.all(np.sum(masks, axis=0) == 1)
    for m in masks:
        assert len({g for g, t in zip(groups, m) if t} & {g for g, t in zip(groups, m) if not t}) == 0
    with pytest.raises(ValueError, match="at least 5"):
        group_folds(["a", "b"], 5)


def test_predicted_vmaf_monotone_in_bitrate():
    cfg = default_config()
    params = synthetic.SurfaceParams()
    train_recs = synthetic.generate_dataset(params, 30, cfg, seed=21)
    X = design_matrix(train_recs)
    f = train(X, np.array([r.measured_vmaf for r in train_recs]), Hyperparams(n_estimators=30))
    test_recs = synthetic.generate_dataset(params, 10, cfg, seed=22)
    pred = f.predict(design_matrix(test_recs))
    rates = [r.representation.target_bitrate for r in test_recs]
    means = [float(np.mean([p for p, b in zip(pred, rates) if b == rep.target_bitrate]))
             for rep in cfg.representations]
    drops = [a - b for a, b in zip(means, means[1:]) if b < a]
    assert len(drops) <= 1 and all(d < 0.5 for d in drops)
