"""Parametric ground-truth rate/quality/speed surface.

Stands in for an encoder plus quality meter: it produces training data for
the forests and exact oracles for the optimizer. With ``b`` the bitrate in
Mbps, ``H`` the height, ``f`` the framerate, ``p`` the preset and ``(E, h, L)``
the segment features, the noise-free surface is::

    c      = 1 + E / complexity_E + h / complexity_h
    rel    = b / (H / 1080)                       # bitrate per unit height
    base   = ceiling(H) - amplitude * c * rel ** -slope
    x      = crossover * exp(cross_E * (E - 60) / 60 + cross_h * (h - 25) / 25)
    u      = log2(f / 7.5) / 2                    # 7.5 fps -> 0, 30 fps -> 1
    w      = fr_weight * (0.5 + h / 50)
    temp   = w * (ln(b / x) * u + fr_bump * u * (1 - u))
    raw    = base + temp + preset_gain * p - luma_weight * |L - 128| / 128
    vmaf   = clip(soft(raw), 0, 100)

where ``soft`` is the identity up to ``knee`` and approaches 100 smoothly
above it (``knee + (100 - knee) * (1 - exp(-(raw - knee) / (100 - knee)))``),
so quality stays strictly increasing instead of tying at the clip.

    speed  = speed_base * (1080 / H) ** res_exponent * b ** -bitrate_exponent
             * preset_divisor ** -p * (30 / f) ** kappa
             / (1 + E / speed_E + h / speed_h)

Below the crossover ``x`` the lowest framerate yields the highest quality;
above it the highest framerate wins, with high-motion content needing more
bits before full framerate pays off. Speed is expressed on the source
timeline (frames of 30 fps source per second), so the real-time condition is
``speed >= 30`` regardless of the encoded framerate.

Encoding energy of one segment is ``power_w * duration * 30 / speed`` joules.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .domain import EncodingRecord, LadderConfig, Representation, SegmentFeatures, tomllib

FEATURE_RANGES = {"E": (10.0, 130.0), "h": (2.0, 55.0), "L": (90.0, 150.0)}

_CEILINGS = {234: 60.0, 360: 67.0, 432: 71.0, 540: 75.0, 720: 80.0, 1080: 84.5}


@dataclass(frozen=True)
class SurfaceParams:
    ceilings: dict = field(default_factory=lambda: dict(_CEILINGS))
    amplitude: float = 18.0
    slope: float = 0.8
    complexity_E: float = 200.0
    complexity_h: float = 110.0
    crossover: float = 1.3
    cross_E: float = 0.6
    cross_h: float = 1.2
    fr_weight: float = 6.0
    fr_bump: float = 0.8
    preset_gain: float = 2.0
    luma_weight: float = 1.5
    knee: float = 90.0
    speed_base: float = 260.0
    res_exponent: float = 0.6
    bitrate_exponent: float = 0.25
    preset_divisor: float = 1.7
    kappa: float = 1.0
    speed_E: float = 130.0
    speed_h: float = 45.0
    noise_vmaf: float = 1.5
    noise_speed: float = 0.03
    power_w: float = 100.0
    segment_duration_s: float = 4.0
    source_fps: float = 30.0
    seed: int = 0

    def __post_init__(self):
        ceilings = {int(k): float(v) for k, v in dict(self.ceilings).items()}
        object.__setattr__(self, "ceilings", ceilings)
        if not ceilings or max(ceilings.values()) > 100:
            raise ValueError("ceilings must be non-empty and <= 100")
        for name in ("amplitude", "slope", "complexity_E", "complexity_h", "crossover", "speed_base",
                     "speed_E", "speed_h", "power_w", "segment_duration_s", "source_fps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 <= self.knee < 100:
            raise ValueError("knee must lie in [0, 100)")
        if self.preset_divisor <= 1:
            raise ValueError("preset_divisor must be > 1")
        if self.noise_vmaf < 0 or self.noise_speed < 0:
            raise ValueError("noise amplitudes must be >= 0")

    def ceiling(self, height: int) -> float:
        """Quality ceiling, linear in log(height) between tabulated heights."""
        if height in self.ceilings:
            return self.ceilings[height]
        hs = sorted(self.ceilings)
        return float(np.interp(math.log(height), np.log(hs), [self.ceilings[k] for k in hs]))

    @classmethod
    def from_mapping(cls, data: dict) -> "SurfaceParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown surface parameters: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SurfaceParams":
        path = Path(path)
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(path.read_text("utf-8"))
        else:
            import json
            data = json.loads(path.read_text("utf-8"))
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ceilings"] = {str(k): v for k, v in self.ceilings.items()}
        return d


def truth_vmaf(params: SurfaceParams, features: SegmentFeatures, rep: Representation,
               framerate: float, preset: int) -> float:
    E, h, L = features.as_tuple()
    b = rep.target_bitrate / 1e6
    rel = b / (rep.resolution_height / 1080.0)
    c = 1.0 + E / params.complexity_E + h / params.complexity_h
    base = params.ceiling(rep.resolution_height) - params.amplitude * c * rel ** -params.slope
    x = params.crossover * math.exp(params.cross_E * (E - 60.0) / 60.0 + params.cross_h * (h - 25.0) / 25.0)
    u = math.log2(framerate / 7.5) / 2.0
    w = params.fr_weight * (0.5 + h / 50.0)
    temporal = w * (math.log(b / x) * u + params.fr_bump * u * (1.0 - u))
    v = base + temporal + params.preset_gain * preset - params.luma_weight * abs(L - 128.0) / 128.0
    if v > params.knee:
        span = 100.0 - params.knee
        v = params.knee + span * (1.0 - math.exp(-(v - params.knee) / span))
    return min(100.0, max(0.0, v))


def truth_speed(params: SurfaceParams, features: SegmentFeatures, rep: Representation,
                framerate: float, preset: int) -> float:
    E, h, _ = features.as_tuple()
    b = rep.target_bitrate / 1e6
    return (params.speed_base * (1080.0 / rep.resolution_height) ** params.res_exponent
            * b ** -params.bitrate_exponent * params.preset_divisor ** -preset
            * (30.0 / framerate) ** params.kappa / (1.0 + E / params.speed_E + h / params.speed_h))


def crossover_bitrate(params: SurfaceParams, features: SegmentFeatures) -> float:
    """Bitrate (bps) at which the lowest and highest framerates tie in quality, at any height."""
    E, h, _ = features.as_tuple()
    x = params.crossover * math.exp(params.cross_E * (E - 60.0) / 60.0 + params.cross_h * (h - 25.0) / 25.0)
    return x * 1e6


def truth(params: SurfaceParams, features: SegmentFeatures, rep: Representation, framerate: float,
          preset: int, rng: Optional[np.random.Generator] = None) -> tuple[float, float]:
    """(vmaf, speed) of one configuration; noise is added only when `rng` is given."""
    v = truth_vmaf(params, features, rep, framerate, preset)
    s = truth_speed(params, features, rep, framerate, preset)
    if rng is not None:
        v = min(100.0, max(0.0, v + params.noise_vmaf * rng.standard_normal()))
        s = max(0.0, s * (1.0 + params.noise_speed * rng.standard_normal()))
    return v, s


def encoding_energy(params: SurfaceParams, speed: float) -> float:
    """Joules to encode one segment at `speed` (source-timeline fps)."""
    frames = params.segment_duration_s * params.source_fps
    return params.power_w * frames / max(speed, 1e-9)


class SyntheticOracle:
    """Noise-free surface exposed through the optimizer's oracle protocol."""

    def __init__(self, params: SurfaceParams = SurfaceParams()):
        self.params = params

    def evaluate(self, features, rep, framerate, preset):
        return truth(self.params, features, rep, framerate, preset)

    def grid(self, features, rep, framerates, presets):
        v = np.empty((len(framerates), len(presets)))
        s = np.empty_like(v)
        for i, f in enumerate(framerates):
            for j, p in enumerate(presets):
                v[i, j], s[i, j] = truth(self.params, features, rep, f, p)
        return v, s


def sample_features(rng: np.random.Generator) -> SegmentFeatures:
    lo, hi = zip(*FEATURE_RANGES.values())
    E, h, L = rng.uniform(lo, hi)
    return SegmentFeatures(float(E), float(h), float(L))


def segment_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def segment_id(index: int) -> str:
    return f"syn{index:05d}"


def generate_dataset(params: SurfaceParams, n_segments: int, config: LadderConfig,
                     seed: Optional[int] = None) -> list[EncodingRecord]:
    """Noisy encodings of every (representation, framerate, preset) for random segments.

    Segment `k` draws its features and noise from its own RNG stream, so the
    output for a given index does not depend on `n_segments`.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    seed = params.seed if seed is None else seed
    records = []
    for k in range(n_segments):
        rng = segment_rng(seed, k)
        feats = sample_features(rng)
        records.extend(realize(params, segment_id(k), feats,
                               [(rep, f, p) for rep in config.representations
                                for f in config.framerates for p in config.presets], rng))
    return records


def realize(params: SurfaceParams, seg_id: str, features: SegmentFeatures,
            configs: Sequence[tuple[Representation, float, int]],
            rng: Optional[np.random.Generator] = None) -> list[EncodingRecord]:
    """Simulated CBR encodings of the given configurations of one segment."""
    out = []
    for rep, f, p in configs:
        v, s = truth(params, features, rep, f, p, rng)
        out.append(EncodingRecord(
            segment_id=seg_id, features=features, representation=rep, framerate=float(f), preset=int(p),
            measured_vmaf=v, measured_speed=s, measured_bitrate=float(rep.target_bitrate),
            measured_energy=encoding_energy(params, s),
        ))
    return out
