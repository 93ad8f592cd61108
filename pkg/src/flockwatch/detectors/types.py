"""Observation data types shared by the samplers and the detectors."""

from __future__ import annotations

from dataclasses import dataclass

from ..domain import ValidationError


@dataclass(frozen=True)
class CountSeries:
    """Per-target follower counts at (approximately) fixed cadence.

    Timestamps are strictly increasing; gaps are real gaps, never
    interpolated points.
    """

    target: int
    times: tuple[int, ...]
    counts: tuple[int, ...]
    gaps: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if len(self.times) != len(self.counts):
            raise ValidationError("times and counts length mismatch")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("count series timestamps must be strictly increasing")
        if any(c < 0 for c in self.counts):
            raise ValidationError("follower counts must be >= 0")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class FollowerSample:
    """Most-recent-first snapshot of up to the recent window of follower ids."""

    target: int
    t: int
    cycle: int
    ids: tuple[int, ...]
    page_times: tuple[float, ...] = ()
    discarded: bool = False
