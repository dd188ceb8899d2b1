import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vfrladder import synthetic, tables
from vfrladder.domain import Representation, SegmentFeatures, default_config
from vfrladder.synthetic import (FEATURE_RANGES, SurfaceParams, SyntheticOracle, crossover_bitrate,
                                 encoding_energy, generate_dataset, realize, truth, truth_speed, truth_vmaf)

P = SurfaceParams()
CFG = default_config()
features = st.builds(SegmentFeatures, st.floats(*FEATURE_RANGES["E"]), st.floats(*FEATURE_RANGES["h"]),
                     st.floats(*FEATURE_RANGES["L"]))


def test_crossover_for_high_motion():
    f = SegmentFeatures(80.0, 50.0, 120.0)
    x = crossover_bitrate(P, f)
    for height in (360, 720, 1080):
        below = Representation(height, int(x * 0.5))
        above = Representation(height, int(x * 2.0))
        assert truth_vmaf(P, f, below, 7.5, 0) >= truth_vmaf(P, f, below, 30, 0)
        assert truth_vmaf(P, f, above, 30, 0) > truth_vmaf(P, f, above, 7.5, 0)


def test_framerate_terms_cancel_at_crossover():
    # at the crossover the log term vanishes and both endpoints have u(1 - u) = 0
    f = SegmentFeatures(60.0, 25.0, 128.0)
    rep = Representation(720, int(round(crossover_bitrate(P, f))))
    assert truth_vmaf(P, f, rep, 7.5, 0) == pytest.approx(truth_vmaf(P, f, rep, 30, 0), abs=1e-5)


def test_closed_form_value():
    f = SegmentFeatures(60.0, 25.0, 128.0)
    rep = Representation(1080, 6_000_000)
    c = 1 + 60 / 200 + 25 / 110
    base = 84.5 - 18.0 * c * 6.0 ** -0.8
    u = 1.0
    temporal = 6.0 * (0.5 + 0.5) * (np.log(6.0 / 1.3) * u)
    raw = base + temporal + 2 * 2.0
    expected = 90 + 10 * (1 - np.exp(-(raw - 90) / 10)) if raw > 90 else raw
    assert truth_vmaf(P, f, rep, 30, 2) == pytest.approx(expected, rel=1e-12)
    speed = 260 * 1.0 * 6.0 ** -0.25 * 1.7 ** -2 / (1 + 60 / 130 + 25 / 45)
    assert truth_speed(P, f, rep, 30, 2) == pytest.approx(speed, rel=1e-12)


@given(features, st.sampled_from(CFG.framerates), st.integers(0, 8))
def test_quality_non_decreasing_in_bitrate(feats, fr, preset):
    for height in (234, 540, 1080):
        vs = [truth_vmaf(P, feats, Representation(height, b), fr, preset)
              for b in (100_000, 400_000, 1_000_000, 3_000_000, 8_000_000, 20_000_000)]
        assert all(b >= a for a, b in zip(vs, vs[1:]))


@given(features, st.sampled_from(CFG.representations), st.sampled_from(CFG.framerates))
def test_speed_strictly_decreasing_in_preset(feats, rep, fr):
    s = [truth_speed(P, feats, rep, fr, p) for p in range(9)]
    assert all(b < a for a, b in zip(s, s[1:]))


def test_truth_is_pure_and_noise_needs_rng():
    f = SegmentFeatures(30.0, 10.0, 110.0)
    rep = CFG.representations[3]
    assert truth(P, f, rep, 24, 3) == truth(P, f, rep, 24, 3)
    noisy = truth(P, f, rep, 24, 3, np.random.default_rng(0))
    assert noisy != truth(P, f, rep, 24, 3)
    assert noisy == truth(P, f, rep, 24, 3, np.random.default_rng(0))


def test_dataset_count_ranges_and_determinism(tmp_path):
    recs = generate_dataset(P, 1, CFG, seed=3)
    assert len(recs) == 1 * 9 * 4 * 9 == 324
    assert all(0 <= r.measured_vmaf <= 100 for r in recs)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    tables.write_records(a, generate_dataset(P, 3, CFG, seed=3))
    tables.write_records(b, generate_dataset(P, 3, CFG, seed=3))
    assert a.read_bytes() == b.read_bytes()
    assert generate_dataset(P, 3, CFG, seed=4) != generate_dataset(P, 3, CFG, seed=3)


def test_segment_stream_independent_of_count():
    few = generate_dataset(P, 2, CFG, seed=8)
    many = generate_dataset(P, 5, CFG, seed=8)
    assert few == many[: len(few)]


def test_sampled_features_in_documented_ranges():
    feats = {r.segment_id: r.features for r in generate_dataset(P, 50, CFG, seed=1)}
    for f in feats.values():
        for name, v in zip("EhL", f.as_tuple()):
            lo, hi = FEATURE_RANGES[name]
            assert lo <= v <= hi


def test_vmaf_clamped_under_heavy_noise():
    loud = SurfaceParams(noise_vmaf=80.0)
    assert all(0 <= r.measured_vmaf <= 100 for r in generate_dataset(loud, 2, CFG, seed=0))


def test_realize_attaches_energy_and_bitrate():
    f = SegmentFeatures(30.0, 10.0, 110.0)
    rep = CFG.representations[0]
    (r,) = realize(P, "x", f, [(rep, 15.0, 2)])
    assert r.measured_bitrate == rep.target_bitrate
    assert r.measured_energy == pytest.approx(encoding_energy(P, r.measured_speed))
    assert encoding_energy(P, 60.0) == pytest.approx(100.0 * 4 * 30 / 60)


def test_oracle_grid_equals_pointwise():
    f = SegmentFeatures(90.0, 40.0, 100.0)
    o = SyntheticOracle(P)
    v, s = o.grid(f, CFG.representations[4], CFG.framerates, CFG.presets)
    for i, fr in enumerate(CFG.framerates):
        for j, p in enumerate(CFG.presets):
            assert (v[i, j], s[i, j]) == o.evaluate(f, CFG.representations[4], fr, p)


def test_params_validation_and_loading(tmp_path):
    for bad in (dict(amplitude=0), dict(preset_divisor=1.0), dict(noise_vmaf=-1),
                dict(ceilings={1080: 101})):
        with pytest.raises(ValueError):
            SurfaceParams(**bad)
    with pytest.raises(ValueError, match="unknown"):
        SurfaceParams.from_mapping({"nope": 1})
    p = tmp_path / "p.toml"
    p.write_text("amplitude = 20.0\nnoise_vmaf = 0.5\n")
    loaded = SurfaceParams.load(p)
    assert loaded.amplitude == 20.0 and loaded.noise_vmaf == 0.5
    j = tmp_path / "p.json"
    j.write_text(json.dumps(P.to_dict()))
    assert SurfaceParams.load(j) == P


def test_ceiling_interpolates_in_log_height():
    assert P.ceiling(1080) == 84.5
    t = (np.log(600) - np.log(540)) / (np.log(720) - np.log(540))
    assert P.ceiling(600) == pytest.approx(75.0 + 5.0 * t, rel=1e-12)


def test_soft_knee_keeps_quality_strictly_increasing_below_100():
    f = SegmentFeatures(10.0, 2.0, 128.0)
    vs = [truth_vmaf(P, f, Representation(1080, b), 30, 8) for b in (6_000_000, 12_000_000, 50_000_000)]
    assert all(90 < v < 100 for v in vs)
    assert vs[0] < vs[1] < vs[2]


def test_high_motion_crossover_is_higher():
    slow, fast = SegmentFeatures(60.0, 5.0, 128.0), SegmentFeatures(60.0, 50.0, 128.0)
    assert crossover_bitrate(P, fast) > crossover_bitrate(P, slow)
