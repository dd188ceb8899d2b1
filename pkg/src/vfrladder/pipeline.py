"""Library-level stages shared by the command line and the demos.

Each function here is what the corresponding subcommand calls, so CLI
output can be reproduced exactly from Python.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import jnd, optimizer
from .complexity import segment_features
from .domain import LadderConfig, LadderEntry
from .tables import FeatureRow
from .video_io import Y4MReader, as_fraction, read_raw_yuv, segment_stream


def segment_name(prefix: str, index: int) -> str:
    return f"{prefix}_s{index:03d}"


def analyze_frames(frames: Iterable, fps, prefix: str, segment_duration=4,
                   workers: Optional[int] = None) -> list[FeatureRow]:
    fps = as_fraction(fps)
    rows = []
    for k, seg in enumerate(segment_stream(frames, fps, segment_duration)):
        rows.append(FeatureRow(segment_name(prefix, k), segment_features(seg, workers), float(fps), len(seg)))
    return rows


def analyze_video(path, segment_duration=4, raw: Optional[dict] = None,
                  workers: Optional[int] = None, prefix: Optional[str] = None) -> list[FeatureRow]:
    """Complexity features for every segment of a Y4M file, or raw YUV when `raw` is given.

    `raw` needs ``width``, ``height`` and ``fps``; ``bitdepth`` and ``chroma``
    are optional. Segment ids are ``<prefix>_sNNN`` with the file stem as
    default prefix.
    """
    path = Path(path)
    prefix = prefix or path.stem
    with open(path, "rb") as fh:
        if raw is None:
            reader = Y4MReader(fh)
            return analyze_frames(reader, reader.fps, prefix, segment_duration, workers)
        frames = read_raw_yuv(fh, int(raw["width"]), int(raw["height"]), int(raw.get("bitdepth", 8)),
                              str(raw.get("chroma", "420")))
        return analyze_frames(frames, raw["fps"], prefix, segment_duration, workers)


def build_ladders(feature_rows: Sequence[FeatureRow], oracle, config: LadderConfig, mode: str,
                  bruteforce: bool = False) -> list[tuple[str, list[LadderEntry]]]:
    """Ladder per segment. `mode` is ``eco``, ``hq`` or ``default`` (fixed reference)."""
    out = []
    for row in feature_rows:
        if mode == "default":
            ladder = optimizer.default_ladder(oracle, row.features, config)
        elif bruteforce:
            ladder = optimizer.bruteforce_ladder(oracle, row.features, config, mode)
        else:
            ladder = optimizer.build_ladder(oracle, row.features, config, mode)
        out.append((row.segment_id, ladder))
    return out


def prune_ladders(ladders: Sequence[tuple[str, Sequence[LadderEntry]]], v_J: float,
                  v_T: Optional[float] = None) -> list[tuple[str, list[LadderEntry]]]:
    return [(seg, jnd.eliminate(entries, v_J, v_T)) for seg, entries in ladders]
