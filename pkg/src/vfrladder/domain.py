"""Core vocabulary types and ladder configuration.

Bitrates are integer bits per second everywhere. Presets are integer indices
with 0 the fastest; encoder preset names are display metadata only.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


X264_PRESET_NAMES = (
    "ultrafast", "superfast", "veryfast", "faster", "fast",
    "medium", "slow", "slower", "veryslow", "placebo",
)


class ConfigError(ValueError):
    """Raised when a ladder configuration violates an invariant."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Representation:
    resolution_height: int
    target_bitrate: int

    def __post_init__(self):
        if self.resolution_height <= 0:
            raise ValueError(f"resolution_height must be positive, got {self.resolution_height}")
        if self.target_bitrate <= 0:
            raise ValueError(f"target_bitrate must be positive, got {self.target_bitrate}")

    @property
    def log_bitrate(self) -> float:
        return math.log(self.target_bitrate)


@dataclass(frozen=True)
class SegmentFeatures:
    """Per-segment complexity triple: texture energy, its temporal gradient, mean luma."""

    energy_E: float
    gradient_h: float
    luminescence_L: float

    def __post_init__(self):
        if not (self.energy_E >= 0 and self.gradient_h >= 0 and self.luminescence_L >= 0):
            raise ValueError(f"complexity features must be non-negative: {self}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.energy_E, self.gradient_h, self.luminescence_L)


@dataclass(frozen=True)
class EncodingRecord:
    segment_id: str
    features: SegmentFeatures
    representation: Representation
    framerate: float
    preset: int
    measured_vmaf: float
    measured_speed: float
    measured_psnr: Optional[float] = None
    measured_bitrate: Optional[float] = None
    measured_energy: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.measured_vmaf <= 100.0:
            raise ValueError(f"measured_vmaf out of [0, 100]: {self.measured_vmaf}")
        if self.measured_speed < 0:
            raise ValueError(f"measured_speed must be >= 0: {self.measured_speed}")


@dataclass(frozen=True)
class LadderEntry:
    representation: Representation
    framerate: float
    preset: int
    predicted_vmaf: float
    predicted_speed: float
    infeasible: bool = False


def _mbps(value: float) -> int:
    return int(round(value * 1_000_000))


# Apple HLS authoring ladder.
DEFAULT_LADDER = (
    (234, 0.145), (360, 0.365), (432, 0.730), (432, 1.100), (540, 2.000),
    (720, 3.000), (720, 4.500), (1080, 6.000), (1080, 7.800),
)


@dataclass(frozen=True)
class LadderConfig:
    representations: tuple[Representation, ...]
    framerates: tuple[float, ...]
    presets: tuple[int, ...]
    target_speed_fT: float = 30.0
    jnd_vJ: float = 6.0
    vmaf_threshold_vT: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "representations", tuple(self.representations))
        object.__setattr__(self, "framerates", tuple(float(f) for f in self.framerates))
        object.__setattr__(self, "presets", tuple(int(p) for p in self.presets))
        if self.vmaf_threshold_vT is None:
            object.__setattr__(self, "vmaf_threshold_vT", 100.0 - self.jnd_vJ)

    @property
    def fastest_preset(self) -> int:
        return self.presets[0]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["representations"] = [
            {"resolution_height": r.resolution_height, "target_bitrate": r.target_bitrate}
            for r in self.representations
        ]
        d["framerates"] = list(self.framerates)
        d["presets"] = list(self.presets)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LadderConfig":
        reps = []
        for r in d["representations"]:
            if isinstance(r, dict):
                if "target_bitrate" in r:
                    bitrate = int(r["target_bitrate"])
                else:
                    bitrate = _mbps(float(r["bitrate_mbps"]))
                reps.append(Representation(int(r["resolution_height"]), bitrate))
            else:
                height, mbps = r
                reps.append(Representation(int(height), _mbps(float(mbps))))
        kwargs = {k: d[k] for k in ("target_speed_fT", "jnd_vJ", "vmaf_threshold_vT") if k in d}
        return cls(
            representations=tuple(reps),
            framerates=tuple(d["framerates"]),
            presets=tuple(d["presets"]),
            **kwargs,
        )


def default_config(jnd_vJ: float = 6.0) -> LadderConfig:
    return LadderConfig(
        representations=tuple(Representation(h, _mbps(b)) for h, b in DEFAULT_LADDER),
        framerates=(7.5, 15.0, 24.0, 30.0),
        presets=tuple(range(9)),
        target_speed_fT=30.0,
        jnd_vJ=jnd_vJ,
        vmaf_threshold_vT=100.0 - jnd_vJ,
    )


def validate(config: LadderConfig) -> list[str]:
    """Return every invariant violation of `config`; an empty list means valid."""
    errors = []
    reps = config.representations
    if not reps:
        errors.append("representations: must be non-empty")
    elif any(b.target_bitrate <= a.target_bitrate for a, b in zip(reps, reps[1:])):
        errors.append("representations: representations not ascending in target_bitrate")
    if not config.framerates:
        errors.append("framerates: must be non-empty")
    else:
        if any(f <= 0 or not math.isfinite(f) for f in config.framerates):
            errors.append("framerates: all values must be > 0")
        if any(b <= a for a, b in zip(config.framerates, config.framerates[1:])):
            errors.append("framerates: must be strictly ascending")
    if not config.presets:
        errors.append("presets: must be non-empty")
    elif list(config.presets) != list(range(config.presets[0], config.presets[0] + len(config.presets))):
        errors.append("presets: must be contiguous ascending integers starting at the fastest")
    if not (0 < config.jnd_vJ < 100):
        errors.append("jnd_vJ: jnd_vJ out of range (0, 100)")
    if not (0 < config.vmaf_threshold_vT <= 100):
        errors.append("vmaf_threshold_vT: out of range (0, 100]")
    if not (config.target_speed_fT > 0):
        errors.append("target_speed_fT: must be > 0")
    return errors


def check(config: LadderConfig) -> LadderConfig:
    errors = validate(config)
    if errors:
        raise ConfigError(errors)
    return config


def load_config(path: str | Path) -> LadderConfig:
    """Read a TOML or JSON config file; missing keys fall back to the defaults."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        data = tomllib.loads(raw.decode("utf-8"))
    else:
        data = json.loads(raw)
    base = default_config().to_dict()
    if "jnd_vJ" in data and "vmaf_threshold_vT" not in data:
        base.pop("vmaf_threshold_vT")
    base.update(data)
    return check(LadderConfig.from_dict(base))


def dump_config(config: LadderConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)
