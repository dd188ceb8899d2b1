"""
ECO and HQ ladders under a real-time constraint
===============================================

For every representation of the ladder the optimiser picks a framerate
(ECO, fastest preset only) or a framerate and preset (HQ) that maximise
predicted VMAF while the predicted speed stays at or above the target.
"""

from dataclasses import replace

from vfrladder import synthetic
from vfrladder.domain import SegmentFeatures, default_config
from vfrladder.optimizer import build_ladder, default_ladder

config = default_config()
oracle = synthetic.SyntheticOracle()

calm = SegmentFeatures(30.0, 5.0, 120.0)
busy = SegmentFeatures(110.0, 50.0, 120.0)

# %%
# Low-motion content reaches full framerate at lower bitrates than
# high-motion content; HQ trades framerate for slower presets where speed allows.
for name, feats in (("calm", calm), ("busy", busy)):
    print(f"\n{name} segment {feats.as_tuple()}")
    print(" height  Mbps |  ECO fps  vmaf |  HQ fps preset  vmaf | fixed vmaf")
    eco = build_ladder(oracle, feats, config, "eco")
    hq = build_ladder(oracle, feats, config, "hq")
    ref = default_ladder(oracle, feats, config)
    for e, h, r in zip(eco, hq, ref):
        rep = e.representation
        print(f" {rep.resolution_height:6d} {rep.target_bitrate / 1e6:5.3f} | {e.framerate:7.1f} {e.predicted_vmaf:5.1f}"
              f" | {h.framerate:6.1f} {h.preset:6d} {h.predicted_vmaf:5.1f} | {r.predicted_vmaf:10.1f}")

# %%
# A stricter speed target can only lower the achievable quality.
for f_T in (30, 60, 120):
    ladder = build_ladder(oracle, busy, replace(config, target_speed_fT=f_T), "hq")
    print(f"f_T={f_T:3d}: top rung vmaf {ladder[-1].predicted_vmaf:.2f}, preset {ladder[-1].preset}")
