"""Circulation detection over recent-follower samples.

Follower lists are ordered by follow time, so an id that reappears
*above* ids that used to be above it must have unfollowed and
re-followed in between.  Mere disappearance from the window proves
nothing: growth alone buries old followers.  The detector therefore
tracks a monotone order stamp per id and counts a new follow episode
only when an id inverts against enough previously-more-recent ids
(`noise_margin` guards against adjacent-swap ordering noise).

This inference is deliberately sampling-limited: when a target gains
more than the whole window between samples, re-follows get buried before
they are ever seen, and detected circulations undercount the truth.
"""

from __future__ import annotations

from bisect import bisect_right, insort
from dataclasses import dataclass, field

from ..domain import ValidationError
from .types import FollowerSample

_RANK_BITS = 20  # window ranks fit comfortably below 2**20


def _stamp(sample_idx: int, rank: int) -> int:
    return (sample_idx << _RANK_BITS) | ((1 << _RANK_BITS) - 1 - rank)


@dataclass
class CirculationRecord:
    """Follow episodes of one id on one target; circulations = episodes - 1."""

    follower: int
    target: int
    episodes: list[tuple[int, int]]  # (first_seen, last_seen) per episode

    @property
    def circulations(self) -> int:
        return len(self.episodes) - 1


@dataclass
class _IdState:
    stamp: int
    first_seen: int
    last_seen: int
    closed: list[tuple[int, int]] = field(default_factory=list)


def detect_circulations(
    samples: list[FollowerSample],
    noise_margin: int = 3,
) -> list[CirculationRecord]:
    """Records for every id observed with at least two follow episodes.

    `samples` must be time-ordered samples of a single target.
    """
    if not samples:
        return []
    target = samples[0].target
    prev_t = None
    for s in samples:
        if s.target != target:
            raise ValidationError("samples mix targets")
        if prev_t is not None and s.t <= prev_t:
            raise ValidationError("samples must be strictly time-ordered")
        prev_t = s.t

    states: dict[int, _IdState] = {}
    for s_idx, sample in enumerate(samples):
        if sample.discarded:
            continue
        ids = sample.ids
        n = len(ids)
        # Walk oldest-rank first; an id re-followed iff enough already-walked
        # (older-ranked) ids carry a newer stamp than its own.
        seen_stamps: list[int] = []
        movers: list[int] = []
        for pos in range(n - 1, -1, -1):
            uid = ids[pos]
            state = states.get(uid)
            if state is not None:
                inversions = len(seen_stamps) - bisect_right(seen_stamps, state.stamp)
                if inversions > noise_margin:
                    movers.append(uid)
                insort(seen_stamps, state.stamp)
        for uid in movers:
            state = states[uid]
            state.closed.append((state.first_seen, state.last_seen))
            state.first_seen = sample.t
        for rank, uid in enumerate(ids):
            stamp = _stamp(s_idx, rank)
            state = states.get(uid)
            if state is None:
                states[uid] = _IdState(stamp=stamp, first_seen=sample.t, last_seen=sample.t)
            else:
                state.stamp = stamp
                state.last_seen = sample.t

    records = []
    for uid, state in states.items():
        episodes = state.closed + [(state.first_seen, state.last_seen)]
        if len(episodes) >= 2:
            records.append(
                CirculationRecord(follower=uid, target=target, episodes=episodes)
            )
    records.sort(key=lambda r: r.follower)
    return records


@dataclass(frozen=True)
class CirculationBucket:
    start: int
    count: int
    observed: bool


def circulation_series(
    records: list[CirculationRecord],
    sample_times: list[int],
    bucket: int = 86400,
) -> list[CirculationBucket]:
    """Circulations per bucket, keyed by episode-open time.

    Buckets with no overlapping sample are flagged unobserved rather than
    reported as zero activity.
    """
    if bucket <= 0:
        raise ValidationError("bucket must be > 0")
    if not sample_times:
        return []
    times = sorted(sample_times)
    lo = times[0] - times[0] % bucket
    hi = times[-1]
    opens: list[int] = []
    for rec in records:
        # Every episode after the first opens a circulation.
        for first_seen, _ in rec.episodes[1:]:
            opens.append(first_seen)
    counts: dict[int, int] = {}
    for t in opens:
        counts[t - t % bucket] = counts.get(t - t % bucket, 0) + 1
    observed = set()
    for t in times:
        observed.add(t - t % bucket)
    out = []
    b = lo
    while b <= hi:
        out.append(
            CirculationBucket(start=b, count=counts.get(b, 0), observed=b in observed)
        )
        b += bucket
    return out
