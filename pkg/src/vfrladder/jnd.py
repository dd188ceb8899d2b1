"""JND-based elimination of perceptually redundant ladder representations."""

from __future__ import annotations

from typing import Optional, Sequence

from .domain import LadderEntry


def eliminate_indices(vmaf: Sequence[float], v_J: float, v_T: Optional[float] = None) -> list[int]:
    """Zero-based indices of the representations kept by the elimination scan.

    The first representation is always kept. Scanning in ladder order, an
    entry is kept when it is at least `v_J` above the last kept one, and the
    scan stops as soon as a kept entry reaches `v_T`. Quality sequences are
    never re-sorted.
    """
    if len(vmaf) == 0:
        raise ValueError("empty ladder")
    if v_T is None:
        v_T = 100.0 - v_J
    if not v_J > 0:
        raise ValueError("v_J must be > 0")
    if v_T > 100:
        raise ValueError("v_T must be <= 100")
    kept = [0]
    if vmaf[0] >= v_T:
        return kept
    u = 0
    for t in range(1, len(vmaf)):
        if vmaf[t] - vmaf[u] >= v_J:
            kept.append(t)
            u = t
            if vmaf[t] >= v_T:
                return kept
    return kept


def eliminate(entries: Sequence[LadderEntry], v_J: float, v_T: Optional[float] = None) -> list[LadderEntry]:
    keep = eliminate_indices([e.predicted_vmaf for e in entries], v_J, v_T)
    return [entries[i] for i in keep]
