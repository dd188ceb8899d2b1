"""DCT-energy complexity features of luma frames and segments.

Each frame is centered on its mid-level, cut into 32x32 blocks and every
block transformed with an orthonormal 2-D DCT-II. Partial blocks on the right
and bottom edges are completed by replicating their last row/column, so the
block count depends only on resolution and a flat frame has no AC energy at
any size. A block's texture energy is the frequency-weighted sum of its AC
magnitudes, with weight exp(|(i/w)^2 + (j/w)^2 - 1|).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.fft import dctn

from .domain import SegmentFeatures
from .video_io import FrameY, Segment

BLOCK = 32


def _weights(w: int = BLOCK) -> np.ndarray:
    i = np.arange(w, dtype=np.float64) / w
    wt = np.exp(np.abs(i[:, None] ** 2 + i[None, :] ** 2 - 1.0))
    wt[0, 0] = 0.0
    return wt


WEIGHTS = _weights()


@dataclass(frozen=True)
class FrameFeatures:
    energy_E: float
    gradient_h: float
    luminescence_L: float


def block_texture_energy(block: np.ndarray) -> float:
    """Weighted AC energy of a single block (already centered, up to 32x32).

    Smaller blocks are edge-replicated to 32x32 at the bottom/right.
    """
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (BLOCK, BLOCK):
        if block.shape[0] > BLOCK or block.shape[1] > BLOCK:
            raise ValueError(f"block larger than {BLOCK}x{BLOCK}: {block.shape}")
        block = np.pad(block, ((0, BLOCK - block.shape[0]), (0, BLOCK - block.shape[1])), mode="edge")
    coeffs = dctn(block, type=2, norm="ortho")
    return float(np.sum(WEIGHTS * np.abs(coeffs)))


def to_blocks(luma: np.ndarray, bitdepth: int = 8) -> np.ndarray:
    """Center a luma plane and tile it into (n_blocks, 32, 32), row-major block order."""
    h, w = luma.shape
    centered = luma.astype(np.float64) - float(1 << (bitdepth - 1))
    nby, nbx = -(-h // BLOCK), -(-w // BLOCK)
    if (nby * BLOCK, nbx * BLOCK) != (h, w):
        centered = np.pad(centered, ((0, nby * BLOCK - h), (0, nbx * BLOCK - w)), mode="edge")
    return centered.reshape(nby, BLOCK, nbx, BLOCK).swapaxes(1, 2).reshape(-1, BLOCK, BLOCK)


def block_energies(frame: FrameY, workers: Optional[int] = None) -> np.ndarray:
    """Texture energy of every block of `frame`, row-major block order.

    `workers` parallelizes the transforms across blocks; results do not
    depend on it.
    """
    blocks = to_blocks(frame.luma, frame.bitdepth)
    coeffs = dctn(blocks, type=2, norm="ortho", axes=(1, 2), workers=workers)
    return np.einsum("kij,ij->k", np.abs(coeffs), WEIGHTS)


def frame_features(frame: FrameY, prev_frame: Optional[FrameY] = None,
                   prev_energies: Optional[np.ndarray] = None) -> FrameFeatures:
    """Features of one frame; the gradient is 0 without a previous frame.

    `prev_energies` may be passed instead of `prev_frame` to reuse block
    energies already computed for it.
    """
    if prev_frame is not None and prev_frame.luma.shape != frame.luma.shape:
        raise ValueError(f"frame dimension mismatch: {frame.luma.shape} vs {prev_frame.luma.shape}")
    energies = block_energies(frame)
    if prev_energies is None and prev_frame is not None:
        prev_energies = block_energies(prev_frame)
    gradient = 0.0 if prev_energies is None else float(np.mean(np.abs(energies - prev_energies)))
    return FrameFeatures(float(np.mean(energies)), gradient, float(np.mean(frame.luma, dtype=np.float64)))


def segment_features(segment: Segment, workers: Optional[int] = None) -> SegmentFeatures:
    """Average the per-frame features over a segment.

    The gradient mean runs over frames 2..N (zero for a single frame).
    """
    frames = segment.frames
    if not frames:
        raise ValueError("empty segment")
    energy = np.empty(len(frames))
    gradient = np.empty(len(frames))
    luma = np.empty(len(frames))
    prev = None
    for k, frame in enumerate(frames):
        cur = block_energies(frame, workers)
        energy[k] = cur.mean()
        gradient[k] = 0.0 if prev is None else np.mean(np.abs(cur - prev))
        luma[k] = np.mean(frame.luma, dtype=np.float64)
        prev = cur
    h = float(gradient[1:].mean()) if len(frames) > 1 else 0.0
    return SegmentFeatures(float(energy.mean()), h, float(luma.mean()))
