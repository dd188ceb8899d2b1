"""Bjøntegaard deltas, storage delta and the storage-energy model."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

# Storage power per stored bit, and sequential disk write rate.
POWER_PER_BIT_W = 7.84e-12
WRITE_RATE_BYTES_PER_S = 1.9e9


class CurveError(ValueError):
    """RD curve unusable for Bjøntegaard integration."""


@dataclass(frozen=True)
class RDCurve:
    """Rate-distortion points with strictly ascending bitrate."""

    bitrates: tuple[float, ...]
    qualities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "bitrates", tuple(float(b) for b in self.bitrates))
        object.__setattr__(self, "qualities", tuple(float(q) for q in self.qualities))
        if len(self.bitrates) != len(self.qualities):
            raise CurveError("bitrates and qualities differ in length")
        if len(self.bitrates) < 4:
            raise CurveError(f"need at least 4 RD points, got {len(self.bitrates)}")
        if any(b <= 0 for b in self.bitrates):
            raise CurveError("bitrates must be positive")
        if any(b2 <= b1 for b1, b2 in zip(self.bitrates, self.bitrates[1:])):
            raise CurveError("bitrates must be strictly ascending")
        if any(q2 < q1 for q1, q2 in zip(self.qualities, self.qualities[1:])):
            raise CurveError("degenerate curve: quality is not monotone in bitrate")

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "RDCurve":
        b, q = zip(*points)
        return cls(b, q)

    @property
    def log_rates(self) -> np.ndarray:
        return np.log(np.asarray(self.bitrates))


def _avg_poly_difference(x_ref, y_ref, x_test, y_test) -> float:
    lo = max(min(x_ref), min(x_test))
    hi = min(max(x_ref), max(x_test))
    if not hi > lo:
        raise CurveError("curves do not overlap")
    p_ref = np.polyint(np.polyfit(x_ref, y_ref, 3))
    p_test = np.polyint(np.polyfit(x_test, y_test, 3))
    int_ref = np.polyval(p_ref, hi) - np.polyval(p_ref, lo)
    int_test = np.polyval(p_test, hi) - np.polyval(p_test, lo)
    return float((int_test - int_ref) / (hi - lo))


def bd_rate(reference: RDCurve, test: RDCurve) -> float:
    """Average bitrate difference (percent) at equal quality; negative favours `test`.

    Quality must be strictly increasing along both curves, since log-rate is
    fitted as a function of quality.
    """
    for name, c in (("reference", reference), ("test", test)):
        if any(q2 <= q1 for q1, q2 in zip(c.qualities, c.qualities[1:])):
            raise CurveError(f"degenerate {name} curve: quality must be strictly increasing")
    diff = _avg_poly_difference(reference.qualities, reference.log_rates, test.qualities, test.log_rates)
    return (math.exp(diff) - 1.0) * 100.0


def bd_quality(reference: RDCurve, test: RDCurve) -> float:
    """Average quality difference at equal bitrate (BD-PSNR / BD-VMAF)."""
    return _avg_poly_difference(reference.log_rates, reference.qualities, test.log_rates, test.qualities)


def delta_storage(optimized_bitrates: Sequence[float], reference_bitrates: Sequence[float]) -> float:
    ref = math.fsum(reference_bitrates)
    if ref <= 0:
        raise ValueError("reference bitrate sum must be positive")
    return math.fsum(optimized_bitrates) / ref - 1.0


def storage_time_s(data_size_bits: float, write_rate_bytes_per_s: float = WRITE_RATE_BYTES_PER_S) -> float:
    return data_size_bits / (8.0 * write_rate_bytes_per_s)


def storage_energy(data_size_bits: float, power_per_bit_w: float = POWER_PER_BIT_W,
                   write_rate_bytes_per_s: float = WRITE_RATE_BYTES_PER_S) -> float:
    """Joules to store `data_size_bits`: size x power-per-bit x write duration.

    The duration itself is size / write rate, so energy grows with the
    square of the data size.
    """
    if data_size_bits < 0:
        raise ValueError("data size must be non-negative")
    return data_size_bits * power_per_bit_w * storage_time_s(data_size_bits, write_rate_bytes_per_s)


def storage_energy_wh(data_size_bits: float, **kwargs) -> float:
    return storage_energy(data_size_bits, **kwargs) / 3600.0


@dataclass(frozen=True)
class EnergyReport:
    delta_encoding_energy: Optional[float]
    delta_storage_energy: float
    delta_storage: float

    def to_dict(self) -> dict:
        return asdict(self)


def ladder_sizes_bits(records, duration_s: float) -> dict[str, float]:
    """Stored bits per segment: sum over its rungs of bitrate x duration."""
    sizes: dict[str, float] = {}
    for r in records:
        b = r.measured_bitrate if r.measured_bitrate is not None else r.representation.target_bitrate
        sizes[r.segment_id] = sizes.get(r.segment_id, 0.0) + b * duration_s
    return sizes


def energy_report(optimized_records, reference_records, duration_s: float = 4.0,
                  require_encoding_energy: bool = True) -> EnergyReport:
    """Relative encoding energy, storage energy and storage size versus a reference.

    Storage energy is evaluated per segment on the total size of its ladder
    and summed over segments.
    """
    if not optimized_records or not reference_records:
        raise ValueError("both record sets must be non-empty")
    d_enc = None
    missing = [r for r in (*optimized_records, *reference_records) if r.measured_energy is None]
    if missing and require_encoding_energy:
        raise ValueError(f"measured_energy missing on {len(missing)} record(s), e.g. {missing[0].segment_id}")
    if not missing:
        ref_e = math.fsum(r.measured_energy for r in reference_records)
        if ref_e <= 0:
            raise ValueError("reference encoding energy must be positive")
        d_enc = math.fsum(r.measured_energy for r in optimized_records) / ref_e - 1.0
    opt_sizes = ladder_sizes_bits(optimized_records, duration_s)
    ref_sizes = ladder_sizes_bits(reference_records, duration_s)
    ref_sto = math.fsum(storage_energy(s) for s in ref_sizes.values())
    if ref_sto <= 0:
        raise ValueError("reference storage energy must be positive")
    d_sto = math.fsum(storage_energy(s) for s in opt_sizes.values()) / ref_sto - 1.0
    d_s = delta_storage(list(opt_sizes.values()), list(ref_sizes.values()))
    return EnergyReport(d_enc, d_sto, d_s)


def _curves_by_segment(records, quality: str) -> dict[str, tuple[list[float], list[float]]]:
    out: dict[str, tuple[list[float], list[float]]] = {}
    for r in records:
        q = r.measured_vmaf if quality == "vmaf" else r.measured_psnr
        if q is None:
            continue
        b = r.measured_bitrate if r.measured_bitrate is not None else r.representation.target_bitrate
        rates, quals = out.setdefault(r.segment_id, ([], []))
        rates.append(float(b))
        quals.append(float(q))
    return out


def _segment_bd(opt, ref, quality: str):
    rate_deltas, quality_deltas = [], []
    opt_curves = _curves_by_segment(opt, quality)
    for seg, (rb, rq) in _curves_by_segment(ref, quality).items():
        if seg not in opt_curves:
            continue
        ob, oq = opt_curves[seg]
        try:
            ref_c = RDCurve.from_points(sorted(zip(rb, rq)))
            opt_c = RDCurve.from_points(sorted(zip(ob, oq)))
        except CurveError:
            continue
        try:
            quality_deltas.append(bd_quality(ref_c, opt_c))
        except CurveError:
            pass
        try:
            rate_deltas.append(bd_rate(ref_c, opt_c))
        except CurveError:
            pass
    mean = lambda xs: float(np.mean(xs)) if xs else None  # noqa: E731
    return mean(rate_deltas), mean(quality_deltas), len(rate_deltas), len(quality_deltas)


def compare_ladders(optimized_records, reference_records, duration_s: float = 4.0) -> dict:
    """Per-segment BD metrics averaged over segments, plus storage and energy deltas.

    Segments whose curves have fewer than four points or plateau in quality
    are skipped for the affected BD metric; the ``n_*`` fields count the
    segments used. Metrics with no usable segment are ``None``.
    """
    report = {}
    for quality, rate_key, q_key in (("psnr", "BDR_P", "BD_PSNR"), ("vmaf", "BDR_V", "BD_VMAF")):
        bdr, bdq, n_r, n_q = _segment_bd(optimized_records, reference_records, quality)
        report[rate_key] = bdr
        report[q_key] = bdq
        report[f"n_{rate_key}"] = n_r
        report[f"n_{q_key}"] = n_q
    energy = energy_report(optimized_records, reference_records, duration_s, require_encoding_energy=False)
    report["delta_S"] = energy.delta_storage
    report["delta_E_enc"] = energy.delta_encoding_energy
    report["delta_E_sto"] = energy.delta_storage_energy
    report["n_segments"] = len({r.segment_id for r in reference_records})
    report["n_representations_optimized"] = len(optimized_records)
    report["n_representations_reference"] = len(reference_records)
    return report
