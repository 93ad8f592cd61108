"""Cross-experiment analytics: circulation-vs-effect split correlation and
ancient-registry coverage statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import ValidationError, is_ancient


def _pearson(xs: list[float], ys: list[float]) -> float | None:
    if len(xs) < 3:
        return None
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    return float(np.corrcoef(x, y)[0, 1])


@dataclass(frozen=True)
class SplitCorrelation:
    """Pearson r on either side of the critical total-effect value.

    A side with fewer than 3 points (or zero variance) has r = None.
    """

    critical: float
    low_r: float | None
    high_r: float | None
    n_low: int
    n_high: int


def correlate_circulation_vs_effect(
    per_target: list[tuple[float, float]],
    critical: float = 15_000_000,
) -> SplitCorrelation:
    """Split (total absolute waveform effect, total circulations) points at
    the critical effect and correlate each side separately."""
    low = [(e, c) for e, c in per_target if e < critical]
    high = [(e, c) for e, c in per_target if e >= critical]
    return SplitCorrelation(
        critical=critical,
        low_r=_pearson([e for e, _ in low], [c for _, c in low]),
        high_r=_pearson([e for e, _ in high], [c for _, c in high]),
        n_low=len(low),
        n_high=len(high),
    )


def ancient_registry_stats(
    registry: set[int],
    ancient_population: int,
    threshold_digits: int = 8,
) -> tuple[int, float]:
    """(unique ancient ids seen, share of the scenario's ancient population)."""
    if ancient_population < 0:
        raise ValidationError("ancient_population must be >= 0")
    count = sum(1 for uid in registry if is_ancient(uid, threshold_digits))
    fraction = count / ancient_population if ancient_population else 0.0
    return count, fraction
