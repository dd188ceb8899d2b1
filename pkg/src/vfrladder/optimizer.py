"""Per-representation framerate/preset selection under a real-time speed floor.

ECO mode fixes the fastest preset and picks the framerate with the highest
quality among those whose speed is at least ``f_T``; HQ mode searches
framerate-preset pairs jointly. Equal quality is resolved toward the lower
framerate, then the faster preset. When nothing is fast enough the lowest
framerate at the fastest preset is returned and flagged infeasible.

Oracles expose ``evaluate(features, rep, framerate, preset) -> (vmaf, speed)``
and optionally a vectorised ``grid(features, rep, framerates, presets)``
returning two ``(len(framerates), len(presets))`` arrays. The fast path uses
``grid``; :func:`bruteforce_ladder` calls ``evaluate`` once per configuration
and is the reference the fast path is checked against.
"""

from __future__ import annotations

from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .domain import LadderConfig, LadderEntry, Representation, SegmentFeatures


class Mode(str, Enum):
    ECO = "eco"
    HQ = "hq"


class QualitySpeedOracle(Protocol):
    def evaluate(self, features: SegmentFeatures, rep: Representation, framerate: float,
                 preset: int) -> tuple[float, float]: ...


def oracle_grid(oracle, features, rep, framerates, presets):
    """Quality and speed over framerates x presets, clamped to their valid ranges."""
    if hasattr(oracle, "grid"):
        v, s = oracle.grid(features, rep, framerates, presets)
        v, s = np.asarray(v, dtype=np.float64), np.asarray(s, dtype=np.float64)
    else:
        v = np.empty((len(framerates), len(presets)))
        s = np.empty_like(v)
        for i, f in enumerate(framerates):
            for j, p in enumerate(presets):
                v[i, j], s[i, j] = oracle.evaluate(features, rep, f, p)
    return np.clip(v, 0.0, 100.0), np.maximum(s, 0.0)


def _select(rep, framerates, presets, v, s, f_T) -> LadderEntry:
    # v, s indexed [framerate, preset]; iterate in (framerate, preset) ascending order
    f_order = np.argsort(np.asarray(framerates, dtype=float), kind="stable")
    p_order = np.argsort(np.asarray(presets), kind="stable")
    v = v[np.ix_(f_order, p_order)]
    s = s[np.ix_(f_order, p_order)]
    feasible = s >= f_T
    if not feasible.any():
        i0, j0 = f_order[0], p_order[0]
        return LadderEntry(rep, float(framerates[i0]), int(presets[j0]), float(v[0, 0]),
                           float(s[0, 0]), infeasible=True)
    masked = np.where(feasible, v, -np.inf).ravel()
    k = int(np.argmax(masked))  # first occurrence = lowest framerate, then fastest preset
    i, j = divmod(k, v.shape[1])
    return LadderEntry(rep, float(framerates[f_order[i]]), int(presets[p_order[j]]),
                       float(v[i, j]), float(s[i, j]))


def optimize_eco(oracle, features: SegmentFeatures, rep: Representation, framerates: Sequence[float],
                 fastest_preset: int, f_T: float) -> LadderEntry:
    v, s = oracle_grid(oracle, features, rep, framerates, [fastest_preset])
    return _select(rep, framerates, [fastest_preset], v, s, f_T)


def optimize_hq(oracle, features: SegmentFeatures, rep: Representation, framerates: Sequence[float],
                presets: Sequence[int], f_T: float) -> LadderEntry:
    v, s = oracle_grid(oracle, features, rep, framerates, presets)
    return _select(rep, framerates, presets, v, s, f_T)


def optimize(oracle, features, rep, config: LadderConfig, mode: Mode | str) -> LadderEntry:
    mode = Mode(mode)
    if mode is Mode.ECO:
        return optimize_eco(oracle, features, rep, config.framerates, config.fastest_preset,
                            config.target_speed_fT)
    return optimize_hq(oracle, features, rep, config.framerates, config.presets, config.target_speed_fT)


def build_ladder(oracle, features: SegmentFeatures, config: LadderConfig,
                 mode: Mode | str) -> list[LadderEntry]:
    """Optimised entry for every representation, in ladder order.

    `oracle` is typically a :class:`vfrladder.models.ForestOracle`; any
    object following the oracle protocol works.
    """
    return [optimize(oracle, features, rep, config, mode) for rep in config.representations]


def bruteforce_ladder(oracle, features: SegmentFeatures, config: LadderConfig,
                      mode: Mode | str) -> list[LadderEntry]:
    """Exhaustive pointwise scan of every candidate configuration per representation."""
    mode = Mode(mode)
    presets = [config.fastest_preset] if mode is Mode.ECO else list(config.presets)
    f_T = config.target_speed_fT
    ladder = []
    for rep in config.representations:
        best = None
        fallback = None
        for f in sorted(config.framerates):
            for p in sorted(presets):
                v, s = oracle.evaluate(features, rep, f, p)
                v = min(100.0, max(0.0, float(v)))
                s = max(0.0, float(s))
                if fallback is None:
                    fallback = LadderEntry(rep, float(f), int(p), v, s, infeasible=True)
                if s >= f_T and (best is None or v > best.predicted_vmaf):
                    best = LadderEntry(rep, float(f), int(p), v, s)
        ladder.append(best if best is not None else fallback)
    return ladder


def default_ladder(oracle, features: SegmentFeatures, config: LadderConfig) -> list[LadderEntry]:
    """Fixed-configuration reference: highest framerate and fastest preset on every rung."""
    f = max(config.framerates)
    p = config.fastest_preset
    ladder = []
    for rep in config.representations:
        v, s = oracle.evaluate(features, rep, f, p)
        v = min(100.0, max(0.0, float(v)))
        s = max(0.0, float(s))
        ladder.append(LadderEntry(rep, float(f), int(p), v, s, infeasible=s < config.target_speed_fT))
    return ladder
