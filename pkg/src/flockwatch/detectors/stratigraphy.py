"""Follower-list stratigraphy: digit-class composition in follow-order batches.

A tunneled list reads like strata: consecutive batches of followers,
each summarized by the proportion of ids per uid digit class.  An
inversion is a long run of batches where the globally dominant class
loses local dominance, the signature of an embedded reservoir cohort.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import ValidationError, digit_counts


@dataclass(frozen=True)
class StratigraphyBatch:
    index: int
    size: int
    histogram: dict[int, float]  # digit class -> proportion, sums to 1

    def dominant(self, prefer: int | None = None) -> int:
        """Digit class with the largest share; ties prefer `prefer`, then
        the smaller class."""
        best = max(self.histogram.values())
        winners = [d for d, p in self.histogram.items() if p == best]
        if prefer is not None and prefer in winners:
            return prefer
        return min(winners)


def stratify(ids: list[int] | np.ndarray, batch: int = 5000) -> list[StratigraphyBatch]:
    """Digit-class proportions per consecutive batch of `batch` ids."""
    if batch <= 0:
        raise ValidationError("batch size must be > 0")
    arr = np.asarray(ids, dtype=np.uint64)
    if len(arr) == 0:
        raise ValidationError("stratify requires a non-empty id list")
    digits = digit_counts(arr)
    out = []
    for b, lo in enumerate(range(0, len(arr), batch)):
        chunk = digits[lo : lo + batch]
        classes, counts = np.unique(chunk, return_counts=True)
        hist = {int(d): int(c) / len(chunk) for d, c in zip(classes, counts)}
        out.append(StratigraphyBatch(index=b, size=len(chunk), histogram=hist))
    return out


@dataclass(frozen=True)
class InversionRegion:
    start: int  # first batch ordinal, inclusive
    end: int  # last batch ordinal, inclusive
    dominant_classes: tuple[int, ...]  # by in-region share, descending

    @property
    def extent(self) -> int:
        return self.end - self.start + 1


def global_dominant(batches: list[StratigraphyBatch]) -> int:
    totals: dict[int, float] = {}
    for b in batches:
        for d, p in b.histogram.items():
            totals[d] = totals.get(d, 0.0) + p * b.size
    best = max(totals.values())
    return min(d for d, v in totals.items() if v == best)


def find_inversions(
    batches: list[StratigraphyBatch], min_run: int = 10
) -> list[InversionRegion]:
    """Maximal runs of >= min_run consecutive batches whose local dominant
    class differs from the global one."""
    if not batches:
        raise ValidationError("find_inversions requires at least one batch")
    d_star = global_dominant(batches)
    regions: list[InversionRegion] = []
    run_start: int | None = None
    for i, b in enumerate(batches):
        inverted = b.dominant(prefer=d_star) != d_star
        if inverted and run_start is None:
            run_start = i
        if not inverted and run_start is not None:
            _close_run(batches, run_start, i - 1, min_run, regions)
            run_start = None
    if run_start is not None:
        _close_run(batches, run_start, len(batches) - 1, min_run, regions)
    return regions


def _close_run(
    batches: list[StratigraphyBatch],
    start: int,
    end: int,
    min_run: int,
    regions: list[InversionRegion],
) -> None:
    if end - start + 1 < min_run:
        return
    share: dict[int, float] = {}
    for b in batches[start : end + 1]:
        d = b.dominant()
        share[d] = share.get(d, 0.0) + b.histogram[d] * b.size
    ranked = tuple(sorted(share, key=lambda d: (-share[d], d)))
    regions.append(InversionRegion(start=start, end=end, dominant_classes=ranked))


def outside_dominant_share(
    batches: list[StratigraphyBatch], regions: list[InversionRegion]
) -> float:
    """Mean proportion of the global dominant class over non-inverted batches."""
    d_star = global_dominant(batches)
    inside = set()
    for r in regions:
        inside.update(range(r.start, r.end + 1))
    outside = [b for b in batches if b.index not in inside]
    if not outside:
        return 0.0
    total = sum(b.histogram.get(d_star, 0.0) * b.size for b in outside)
    return total / sum(b.size for b in outside)
