"""Timeline-gap detection and the gap-length vs end-date fit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..domain import ValidationError
from .params import YEAR_SECONDS


@dataclass(frozen=True)
class TimelineGap:
    account: int
    gap_start: int
    gap_end: int

    @property
    def length(self) -> int:
        return self.gap_end - self.gap_start

    def to_doc(self) -> dict:
        return {
            "account": self.account,
            "gap_start": self.gap_start,
            "gap_end": self.gap_end,
            "length": self.length,
        }


def detect_gaps(
    timeline: list[int],
    min_gap: int = YEAR_SECONDS,
    account: int = 0,
) -> list[TimelineGap]:
    """All consecutive-tweet deltas of at least `min_gap` seconds."""
    if len(timeline) < 2:
        return []
    if any(b < a for a, b in zip(timeline, timeline[1:])):
        raise ValidationError("timeline must be sorted")
    out = []
    for a, b in zip(timeline, timeline[1:]):
        if b - a >= min_gap:
            out.append(TimelineGap(account=account, gap_start=a, gap_end=b))
    return out


@dataclass(frozen=True)
class GapEndFit:
    """Least-squares fit of gap length against gap end date."""

    slope: float
    intercept: float
    r: float
    n: int
    degenerate: bool = False


def gap_end_correlation(gaps: list[TimelineGap]) -> GapEndFit:
    """Fit length = slope * end + intercept, with the Pearson r of the pair.

    Requires at least 3 gaps; all-identical end dates make the
    correlation undefined and are flagged rather than faked.
    """
    if len(gaps) < 3:
        raise ValidationError(f"need >= 3 gaps for a fit, got {len(gaps)}")
    ends = np.asarray([g.gap_end for g in gaps], dtype=np.float64)
    lengths = np.asarray([g.length for g in gaps], dtype=np.float64)
    if np.all(ends == ends[0]):
        return GapEndFit(slope=math.nan, intercept=math.nan, r=math.nan,
                         n=len(gaps), degenerate=True)
    slope, intercept = np.polyfit(ends, lengths, 1)
    if np.all(lengths == lengths[0]):
        r = 0.0
    else:
        r = float(np.corrcoef(ends, lengths)[0, 1])
    return GapEndFit(slope=float(slope), intercept=float(intercept), r=r, n=len(gaps))
