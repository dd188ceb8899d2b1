"""
Removing perceptually redundant representations
===============================================

Consecutive representations whose predicted VMAF differs by less than one
just-noticeable difference are merged, and the ladder stops at the first
rung that already reaches the visual-quality threshold.
"""

from vfrladder import jnd, metrics, synthetic
from vfrladder.domain import SegmentFeatures, default_config
from vfrladder.optimizer import build_ladder

print(jnd.eliminate_indices([70, 74, 77, 83, 95], v_J=6, v_T=94))

# %%
config = default_config()
ladder = build_ladder(synthetic.SyntheticOracle(), SegmentFeatures(30.0, 5.0, 120.0), config, "hq")
print("full  :", [round(e.predicted_vmaf, 1) for e in ladder])
for v_J in (2, 4, 6):
    kept = jnd.eliminate(ladder, v_J, 94)
    dS = metrics.delta_storage([e.representation.target_bitrate for e in kept],
                               [e.representation.target_bitrate for e in ladder])
    print(f"v_J={v_J}:", [round(e.predicted_vmaf, 1) for e in kept], f"storage change {100 * dS:.1f}%")
