"""
Segment complexity features from raw video
==========================================

A synthetic clip is written as Y4M, read back, cut into segments and
summarised by the (E, h, L) triple: texture energy of 32x32 DCT blocks,
its frame-to-frame change, and mean luma.
"""

import io

import numpy as np

from vfrladder.complexity import segment_features
from vfrladder.video_io import (FrameY, read_y4m, segment_stream, temporal_downsample,
                                temporal_upsample, write_y4m)

# %%
# A 2 s, 30 fps clip: a static noise texture for the first second, then
# a texture that scrolls sideways by 4 pixels per frame.
rng = np.random.default_rng(0)
texture = rng.integers(40, 216, (144, 256 + 4 * 30), dtype=np.uint8)
frames = [FrameY(texture[:, :256], 8) for _ in range(30)]
frames += [FrameY(texture[:, 4 * k:4 * k + 256], 8) for k in range(30)]

buf = io.BytesIO()
write_y4m(buf, frames, 30)
buf.seek(0)
reader = read_y4m(buf)
print("decoded", reader.width, "x", reader.height, "at", reader.fps, "fps")

# %%
# One-second segments. The scrolling segment has the larger temporal
# gradient h; both share the same texture energy E.
for k, seg in enumerate(segment_stream(reader, reader.fps, duration_s=1)):
    f = segment_features(seg)
    print(f"segment {k}: E={f.energy_E:8.2f}  h={f.gradient_h:8.2f}  L={f.luminescence_L:6.2f}")

# %%
# A flat frame has no texture at all.
flat = segment_features(next(segment_stream([FrameY(np.full((144, 256), 90, np.uint8), 8)] * 30, 30, 1)))
print("flat:", flat)

# %%
# Variable framerate delivery drops frames before encoding and repeats them
# after decoding. The round trip restores the frame count.
seg = next(segment_stream(frames, 30, 2))
for fps in (7.5, 15, 24, 30):
    low = temporal_downsample(seg, fps)
    back = temporal_upsample(low, 30)
    print(f"{fps:>4} fps: {len(low):2d} encoded frames -> {len(back)} displayed")
