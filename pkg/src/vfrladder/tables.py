"""CSV interchange: segment features, encoding records and ladders.

Files are UTF-8 with a mandatory header row. Floats are written with
Python's shortest round-trip representation so re-reading is lossless and
output is byte-stable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .domain import EncodingRecord, LadderEntry, Representation, SegmentFeatures

FEATURE_COLUMNS = ("segment_id", "E", "h", "L", "fps", "frames")
RECORD_COLUMNS = ("segment_id", "E", "h", "L", "height", "bitrate", "framerate", "preset",
                  "vmaf", "psnr", "speed", "energy")
LADDER_COLUMNS = ("segment_id", "height", "bitrate", "framerate", "preset", "pred_vmaf",
                  "pred_speed", "infeasible")


class TableError(ValueError):
    """Malformed CSV input."""


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _opt_float(s: Optional[str]) -> Optional[float]:
    return None if s is None or s.strip() == "" else float(s)


def _write(path_or_stream, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        Path(path_or_stream).write_text(text, encoding="utf-8", newline="")


def _read(path_or_stream, required: Sequence[str]) -> list[dict]:
    if hasattr(path_or_stream, "read"):
        text = path_or_stream.read()
        name = getattr(path_or_stream, "name", "<stream>")
    else:
        name = str(path_or_stream)
        text = Path(path_or_stream).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise TableError(f"{name}: missing columns {missing}")
    rows = list(reader)
    for i, row in enumerate(rows, start=2):
        row["__line__"] = f"{name}:{i}"
    return rows


def _wrap(row: dict, fn):
    try:
        return fn(row)
    except (TypeError, ValueError, KeyError) as exc:
        raise TableError(f"{row.get('__line__')}: {exc}") from exc


@dataclass(frozen=True)
class FeatureRow:
    segment_id: str
    features: SegmentFeatures
    fps: float
    frames: int


def write_features(dest, rows: Iterable[FeatureRow]) -> None:
    _write(dest, FEATURE_COLUMNS, ((r.segment_id, *r.features.as_tuple(), r.fps, r.frames) for r in rows))


def read_features(src) -> list[FeatureRow]:
    def parse(r):
        return FeatureRow(r["segment_id"], SegmentFeatures(float(r["E"]), float(r["h"]), float(r["L"])),
                          float(r["fps"]), int(r["frames"]))
    return [_wrap(r, parse) for r in _read(src, FEATURE_COLUMNS)]


def write_records(dest, records: Iterable[EncodingRecord]) -> None:
    _write(dest, RECORD_COLUMNS, (
        (r.segment_id, *r.features.as_tuple(), r.representation.resolution_height,
         r.measured_bitrate if r.measured_bitrate is not None else r.representation.target_bitrate,
         r.framerate, r.preset, r.measured_vmaf, r.measured_psnr, r.measured_speed, r.measured_energy)
        for r in records))


def read_records(src) -> list[EncodingRecord]:
    """Read the record schema; ladder-schema files are accepted too (predictions as measurements)."""
    rows = _read(src, ("segment_id",))
    if rows and "vmaf" not in rows[0] and "pred_vmaf" in rows[0]:
        return [_wrap(r, _ladder_row_as_record) for r in rows]
    missing = [c for c in ("height", "bitrate", "framerate", "preset", "vmaf", "speed") if rows and c not in rows[0]]
    if missing:
        raise TableError(f"missing columns {missing}")

    def parse(r):
        bitrate = float(r["bitrate"])
        return EncodingRecord(
            segment_id=r["segment_id"],
            features=SegmentFeatures(float(r.get("E") or 0), float(r.get("h") or 0), float(r.get("L") or 0)),
            representation=Representation(int(r["height"]), int(round(bitrate))),
            framerate=float(r["framerate"]), preset=int(r["preset"]),
            measured_vmaf=float(r["vmaf"]), measured_speed=float(r["speed"]),
            measured_psnr=_opt_float(r.get("psnr")), measured_bitrate=bitrate,
            measured_energy=_opt_float(r.get("energy")),
        )
    return [_wrap(r, parse) for r in rows]


def _ladder_row_as_record(r) -> EncodingRecord:
    return EncodingRecord(
        segment_id=r["segment_id"], features=SegmentFeatures(0.0, 0.0, 0.0),
        representation=Representation(int(r["height"]), int(round(float(r["bitrate"])))),
        framerate=float(r["framerate"]), preset=int(r["preset"]),
        measured_vmaf=min(100.0, max(0.0, float(r["pred_vmaf"]))),
        measured_speed=max(0.0, float(r["pred_speed"])),
    )


def write_ladders(dest, ladders: Iterable[tuple[str, Sequence[LadderEntry]]]) -> None:
    _write(dest, LADDER_COLUMNS, (
        (seg, e.representation.resolution_height, e.representation.target_bitrate, e.framerate, e.preset,
         e.predicted_vmaf, e.predicted_speed, e.infeasible)
        for seg, entries in ladders for e in entries))


def read_ladders(src) -> list[tuple[str, list[LadderEntry]]]:
    """Ladders grouped by segment, in file order."""
    def parse(r):
        return r["segment_id"], LadderEntry(
            Representation(int(r["height"]), int(r["bitrate"])), float(r["framerate"]), int(r["preset"]),
            float(r["pred_vmaf"]), float(r["pred_speed"]),
            infeasible=r.get("infeasible", "false").strip().lower() in ("true", "1"))
    out: dict[str, list[LadderEntry]] = {}
    for r in _read(src, LADDER_COLUMNS[:7]):
        seg, entry = _wrap(r, parse)
        out.setdefault(seg, []).append(entry)
    return list(out.items())
