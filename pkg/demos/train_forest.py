"""
Training the quality and speed forests
======================================

Random forests map (E, h, L, height, log bitrate, framerate, preset) to
VMAF and to encoding speed. The training data here comes from the
parametric synthetic encoder, so the held-out error can be compared with a
known ground truth.
"""

import numpy as np

from vfrladder import synthetic
from vfrladder.domain import default_config
from vfrladder.forest import Hyperparams, cross_validate, design_matrix, train

config = default_config()
records = synthetic.generate_dataset(synthetic.SurfaceParams(), 40, config, seed=1)
print(len(records), "encodings of 40 segments")

X = design_matrix(records)
vmaf = np.array([r.measured_vmaf for r in records])
speed = np.array([r.measured_speed for r in records])
groups = [r.segment_id for r in records]

# %%
# Grouped five-fold cross-validation keeps every encoding of a segment in
# the same fold, so the score reflects unseen content.
hp = Hyperparams(n_estimators=30, max_depth=14)
for name, y in (("vmaf", vmaf), ("speed", speed)):
    cv = cross_validate(X, y, groups, hp, k=5, threads=None)
    print(f"{name:5s}  R2 per fold {np.round(cv.r2, 3)}  mean MAE {cv.mean_mae:.2f}")

# %%
# Impurity-based importance of the final VMAF model.
model = train(X, vmaf, hp, threads=None)
for feature, weight in sorted(model.feature_importance().items(), key=lambda kv: -kv[1]):
    print(f"{feature:12s} {weight:.3f}")

# %%
# Models serialise to JSON and predict identically after reloading.
clone = type(model).loads(model.dumps())
assert np.array_equal(clone.predict(X[:100]), model.predict(X[:100]))
