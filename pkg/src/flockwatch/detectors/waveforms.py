"""Spike / sawtooth decomposition of follower-count series.

A spike is a short excursion that returns to the running baseline; a
sawtooth is a sharp drop that completes within a few samples and never
recovers inside the horizon.  Positive permanent steps are kept as
`organic_step` events rather than discarded, but they are not sawteeth.

The baseline is a trailing median, which is robust against the spikes
themselves; the open threshold scales with the MAD of one-step deltas so
organic chatter does not trip it.  Effects are signed peak (or new-level)
deviations from the frozen pre-event baseline, and all effect arithmetic
is exact (medians of integer counts are integers or half-integers).
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..domain import ValidationError
from .params import DetectorParams
from .types import CountSeries

SPIKE = "spike"
SAWTOOTH = "sawtooth"
ORGANIC_STEP = "organic_step"


class InsufficientData(ValueError):
    """Series shorter than the baseline window."""


@dataclass(frozen=True)
class WaveformEvent:
    kind: str
    t_start: int
    t_end: int
    effect: float  # signed; exact half-integer multiples
    baseline: float

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "effect": self.effect,
            "baseline": self.baseline,
        }


class _RollingMedian:
    """Median over a fixed-size trailing window (sorted insert/remove)."""

    def __init__(self, size: int):
        self.size = size
        self._window: list[int] = []
        self._sorted: list[int] = []

    def push(self, value: int) -> None:
        self._window.append(value)
        insort(self._sorted, value)
        if len(self._window) > self.size:
            old = self._window.pop(0)
            del self._sorted[bisect_left(self._sorted, old)]

    def full(self) -> bool:
        return len(self._window) >= self.size

    def median(self) -> float:
        s = self._sorted
        n = len(s)
        mid = n // 2
        if n % 2:
            return float(s[mid])
        return (s[mid - 1] + s[mid]) / 2.0


def _threshold(counts: np.ndarray, params: DetectorParams) -> float:
    deltas = np.abs(np.diff(counts))
    mad = float(np.median(np.abs(deltas - np.median(deltas)))) if len(deltas) else 0.0
    return max(float(params.theta_abs), params.mad_k * mad)


def _split_segments(series: CountSeries, params: DetectorParams) -> list[tuple[int, int]]:
    """Index ranges between observation gaps wider than the horizon."""
    times = np.asarray(series.times, dtype=np.float64)
    if len(times) < 2:
        return [(0, len(times))]
    dt = np.diff(times)
    nominal = float(np.median(dt))
    breaks = np.flatnonzero(dt > params.recovery_horizon * nominal)
    bounds = [0, *list(breaks + 1), len(times)]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def detect_waveforms(
    series: CountSeries, params: DetectorParams | None = None
) -> list[WaveformEvent]:
    """Non-overlapping spike / sawtooth / organic_step events, in time order."""
    params = (params or DetectorParams()).validate()
    if len(series) < params.baseline_window:
        raise InsufficientData(
            f"series has {len(series)} samples, need >= {params.baseline_window}"
        )
    events: list[WaveformEvent] = []
    for lo, hi in _split_segments(series, params):
        if hi - lo >= params.baseline_window:
            events.extend(_detect_segment(series, lo, hi, params))
    return events


def _detect_segment(
    series: CountSeries, lo: int, hi: int, params: DetectorParams
) -> list[WaveformEvent]:
    times = series.times
    counts = np.asarray(series.counts[lo:hi], dtype=np.int64)
    theta = _threshold(counts, params)
    m = params.baseline_window
    w = params.recovery_horizon
    eps = params.recovery_eps

    events: list[WaveformEvent] = []
    roll = _RollingMedian(m)
    i = 0
    n = len(counts)
    while i < n:
        if not roll.full():
            roll.push(int(counts[i]))
            i += 1
            continue
        b0 = roll.median()
        if abs(counts[i] - b0) < theta:
            roll.push(int(counts[i]))
            i += 1
            continue

        # Candidate event open at i against the frozen baseline b0.
        open_i = i
        peak_val = int(counts[i])
        window_end = min(open_i + w, n - 1)
        resolved = False
        j = open_i
        while j < window_end:
            j += 1
            if abs(counts[j] - b0) > abs(peak_val - b0):
                peak_val = int(counts[j])
            if abs(counts[j] - b0) <= eps * abs(peak_val - b0):
                events.append(
                    WaveformEvent(
                        kind=SPIKE,
                        t_start=times[lo + open_i],
                        t_end=times[lo + j],
                        effect=float(peak_val - b0),
                        baseline=b0,
                    )
                )
                resolved = True
                break
        if resolved:
            i = j + 1
            # The excursion was short; the trailing window keeps rolling.
            for k in range(open_i, min(j + 1, n)):
                roll.push(int(counts[k]))
            continue

        if window_end - open_i < params.saw_max_fall:
            # Too close to the segment end to classify; drop the candidate.
            break

        # No recovery inside the horizon: a permanent level shift?
        plateau_lo = min(open_i + params.saw_max_fall, n - 1)
        plateau = counts[plateau_lo : window_end + 1]
        level_after = float(np.median(plateau)) if len(plateau) else float(counts[-1])
        shift = level_after - b0
        drop_done = abs(float(counts[plateau_lo]) - level_after) <= max(
            eps * abs(shift), theta / 2
        )
        if shift <= -theta and drop_done:
            events.append(
                WaveformEvent(
                    kind=SAWTOOTH,
                    t_start=times[lo + open_i],
                    t_end=times[lo + plateau_lo],
                    effect=shift,
                    baseline=b0,
                )
            )
        elif shift >= theta:
            events.append(
                WaveformEvent(
                    kind=ORGANIC_STEP,
                    t_start=times[lo + open_i],
                    t_end=times[lo + plateau_lo],
                    effect=shift,
                    baseline=b0,
                )
            )
        # Re-seed the baseline from post-event samples only (w >= m).
        i = window_end + 1
        roll = _RollingMedian(m)
        for k in range(max(open_i + 1, i - m), i):
            roll.push(int(counts[k]))
    return events


@dataclass(frozen=True)
class WaveformStats:
    """Table-style aggregates; net == avg * count holds exactly."""

    spike_count: int
    net_spike_effect: Fraction
    sawtooth_count: int
    net_sawtooth_effect: Fraction
    observed_days: float

    @property
    def spikes_per_day(self) -> float:
        return self.spike_count / self.observed_days

    @property
    def sawteeth_per_day(self) -> float:
        return self.sawtooth_count / self.observed_days

    @property
    def avg_spike_effect(self) -> Fraction:
        return (
            self.net_spike_effect / self.spike_count if self.spike_count else Fraction(0)
        )

    @property
    def avg_sawtooth_effect(self) -> Fraction:
        return (
            self.net_sawtooth_effect / self.sawtooth_count
            if self.sawtooth_count
            else Fraction(0)
        )


def summarize_waveforms(
    events: list[WaveformEvent],
    observed_seconds: float,
    unobserved_seconds: float = 0.0,
) -> WaveformStats:
    """Per-day rates and signed net/avg effects over the observed span.

    The per-day denominator is the observation span minus flagged
    unobserved gaps.
    """
    effective = observed_seconds - unobserved_seconds
    if effective <= 0:
        raise ValidationError("observed duration must be positive")
    days = effective / 86400.0
    spikes = [e for e in events if e.kind == SPIKE]
    saws = [e for e in events if e.kind == SAWTOOTH]
    net_spike = sum((Fraction(e.effect) for e in spikes), Fraction(0))
    net_saw = sum((Fraction(e.effect) for e in saws), Fraction(0))
    return WaveformStats(
        spike_count=len(spikes),
        net_spike_effect=net_spike,
        sawtooth_count=len(saws),
        net_sawtooth_effect=net_saw,
        observed_days=days,
    )
