"""Deterministic synthetic platform with a full ground-truth log.

The whole world is precomputed at build time from (scenario, seed): every
follow/unfollow edge event, every scripted behavior, and every timeline
is a pure function of those inputs.  After the build, the world is
immutable; `advance()` only moves a watermark so reads can be validated
as non-retroactive.  This makes determinism, replay, and the
single-writer/multi-reader contract trivial.

Follower lists are stored per target as parallel arrays sorted by follow
time: (follow_t, id, unfollow_t).  An entry is live at time t iff
follow_t <= t < unfollow_t.  Spikes are aggregate count overlays (a
signed delta that appears and disappears within one sub-second window)
so arbitrarily large spike magnitudes cost O(1); pages served inside an
active spike window are made consistent with the count by masking or
synthesizing the most-recent entries.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

import numpy as np

from ..domain import (
    ConfigurationError,
    ValidationError,
    WatchedUser,
    digit_count,
    uid_range_for_digits,
)
from .scenario import BehaviorScript, Scenario, TargetSpec

NEVER = np.inf

# Entry source codes.
SRC_INITIAL = 0
SRC_ORGANIC = 1
SRC_CIRCULATION = 2
SRC_SLEEPER = 3
SRC_RESERVOIR = 4

# Unfollow cause codes.
UNF_NONE = 0
UNF_ORGANIC = 1
UNF_SAWTOOTH = 2
UNF_CIRCULATION = 3


class UnknownEntityError(KeyError):
    """Unknown target or account id."""


class CursorInvalidated(RuntimeError):
    """A live-mode page cursor was invalidated by list mutation."""


def derived_seed(*labels: Any) -> int:
    """Stable 64-bit seed from a label tuple (independent of PYTHONHASHSEED)."""
    blob = repr(labels).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")


def derived_rng(*labels: Any) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derived_seed(*labels)))


@dataclass(frozen=True)
class GTEvent:
    """One ground-truth record: `t, kind, target, actor, delta` plus extras."""

    t: float
    kind: str
    target: int | None
    actor: int | None
    delta: int
    extra: tuple[tuple[str, Any], ...] = ()

    def to_doc(self) -> dict[str, Any]:
        doc = {
            "t": int(self.t),
            "kind": self.kind,
            "target": self.target,
            "actor": self.actor,
            "delta": self.delta,
        }
        doc.update(dict(self.extra))
        return doc


@dataclass(frozen=True)
class PageCursor:
    target: int
    snapshot_t: float
    offset: int
    version: int
    frozen: bool


@dataclass
class SpikeWindow:
    t_start: float
    t_end: float
    magnitude: int  # signed; positive spikes add synthetic entries on pages
    script_index: int


@dataclass
class TargetLedger:
    """Immutable per-target edge history plus the derived count timeline."""

    uid: int
    handle: str
    category: str
    follow_t: np.ndarray  # float64, ascending
    follow_id: np.ndarray  # uint64
    unfollow_t: np.ndarray  # float64, NEVER if still following
    source: np.ndarray  # uint8 entry source codes
    unfollow_cause: np.ndarray  # uint8
    count_times: np.ndarray  # float64 event times, ascending
    count_values: np.ndarray  # int64 count after each event
    unfollow_sorted: np.ndarray  # finite unfollow times, ascending (live-cursor versioning)
    spike_windows: list[SpikeWindow] = field(default_factory=list)
    scripted_events: list[GTEvent] = field(default_factory=list)

    def count_at(self, t: float) -> int:
        idx = int(np.searchsorted(self.count_times, t, side="right")) - 1
        return int(self.count_values[idx]) if idx >= 0 else 0

    def unfollows_until(self, t: float) -> int:
        return int(np.searchsorted(self.unfollow_sorted, t, side="right"))

    def live_prefix(self, snap: float, need: int | None) -> np.ndarray:
        """Ids live at `snap`, most-recent-first, at most `need` of them."""
        hi = int(np.searchsorted(self.follow_t, snap, side="right"))
        if need is None:
            mask = self.unfollow_t[:hi] > snap
            return self.follow_id[:hi][mask][::-1]
        chunks: list[np.ndarray] = []
        got = 0
        pos = hi
        step = max(2 * need, 8192)
        while pos > 0 and got < need:
            lo = max(0, pos - step)
            mask = self.unfollow_t[lo:pos] > snap
            ids = self.follow_id[lo:pos][mask][::-1]
            chunks.append(ids)
            got += len(ids)
            pos = lo
        if not chunks:
            return np.empty(0, dtype=np.uint64)
        return np.concatenate(chunks)[:need]


@dataclass
class SleeperMember:
    uid: int
    wake_t: int
    tweets: np.ndarray  # int64, ascending, full history
    gaps: list[tuple[int, int]]  # scripted (gap_start, gap_end) pairs


class GroundTruthLog:
    """Authoritative record of everything the simulator injected.

    Organic edges live as arrays inside the target ledgers; scripted
    events as explicit records.  Iteration merges the two in time order.
    """

    def __init__(self, world: "World"):
        self._world = world

    def iter_events(
        self,
        target: int | None = None,
        t_range: tuple[float, float] | None = None,
    ) -> Iterator[GTEvent]:
        ledgers = (
            [self._world.ledger(target)] if target is not None else self._world.ledgers()
        )
        for ledger in ledgers:
            for ev in self._events_for(ledger):
                if t_range is not None and not (t_range[0] <= ev.t <= t_range[1]):
                    continue
                yield ev

    def _events_for(self, ledger: TargetLedger) -> list[GTEvent]:
        start = self._world.start
        events: list[GTEvent] = []
        post = ledger.follow_t >= start
        kind_by_src = {
            SRC_ORGANIC: "follow",
            SRC_CIRCULATION: "circulation",
            SRC_SLEEPER: "follow",
        }
        for src, kind in kind_by_src.items():
            sel = post & (ledger.source == src)
            for t, actor in zip(ledger.follow_t[sel], ledger.follow_id[sel]):
                events.append(GTEvent(t, kind, ledger.uid, int(actor), +1))
        # Sawtooth victims are folded into the script's aggregate record.
        for cause, kind in ((UNF_ORGANIC, "unfollow"), (UNF_CIRCULATION, "circulation")):
            sel = (ledger.unfollow_cause == cause) & np.isfinite(ledger.unfollow_t)
            for t, actor in zip(ledger.unfollow_t[sel], ledger.follow_id[sel]):
                if t >= start:
                    events.append(GTEvent(t, kind, ledger.uid, int(actor), -1))
        events.extend(ledger.scripted_events)
        events.sort(key=lambda e: (e.t, e.kind, e.actor if e.actor is not None else -1))
        return events

    # -- oracle accessors ------------------------------------------------

    def spike_events(self, target: int) -> list[tuple[float, int]]:
        """(t, signed magnitude) per scripted spike occurrence."""
        out = []
        for ev in self._world.ledger(target).scripted_events:
            if ev.kind == "spike" and ev.delta != 0 and dict(ev.extra).get("edge") == "rise":
                out.append((ev.t, ev.delta))
        return sorted(out)

    def sawtooth_events(self, target: int) -> list[tuple[float, int, bool]]:
        """(t, realized signed delta, truncated) per scripted sawtooth."""
        out = []
        for ev in self._world.ledger(target).scripted_events:
            if ev.kind == "sawtooth":
                out.append((ev.t, ev.delta, bool(dict(ev.extra).get("truncated"))))
        return sorted(out)

    def circulation_refollows(self, target: int) -> dict[int, int]:
        """actor uid -> number of scripted re-follow events."""
        ledger = self._world.ledger(target)
        sel = (ledger.source == SRC_CIRCULATION) & (ledger.follow_t >= self._world.start)
        counts: dict[int, int] = {}
        for actor in ledger.follow_id[sel]:
            counts[int(actor)] = counts.get(int(actor), 0) + 1
        return counts

    def total_circulations(self, target: int) -> int:
        return sum(self.circulation_refollows(target).values())

    def net_script_effect(self, target: int) -> dict[str, int]:
        """Summed |delta| of scripted spike rises and sawteeth, per kind."""
        totals = {"spike": 0, "sawtooth": 0}
        for t, mag in self.spike_events(target):
            totals["spike"] += abs(mag)
        for t, delta, _ in self.sawtooth_events(target):
            totals["sawtooth"] += abs(delta)
        return totals

    def true_gaps(self, uid: int) -> list[tuple[int, int]]:
        member = self._world.sleeper_member(uid)
        if member is None:
            return []
        return list(member.gaps)

    def sleeper_wakes(self) -> dict[int, int]:
        return {uid: m.wake_t for uid, m in self._world.sleeper_members().items()}

    def reservoir_blocks(self) -> list[dict[str, Any]]:
        return [dict(b) for b in self._world.reservoir_blocks]

    def export(self, fh) -> int:
        """Write newline-delimited JSON records in time order; returns count."""
        per_target = [self._events_for(ledger) for ledger in self._world.ledgers()]
        merged = heapq.merge(
            *per_target, key=lambda e: (e.t, e.target if e.target is not None else -1)
        )
        n = 0
        for ev in merged:
            doc = ev.to_doc()
            doc["stream"] = "ground_truth"
            fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
            n += 1
        return n


def _draw_unique_uids(
    rng: np.random.Generator,
    digits: int,
    n: int,
    used: np.ndarray | None,
) -> np.ndarray:
    """n distinct uids in the digit class, avoiding `used` (sorted or None)."""
    lo, hi = uid_range_for_digits(digits)
    space = hi - lo - (0 if used is None else len(used))
    if n > space:
        raise ConfigurationError(
            f"digit class {digits} overflow: need {n} ids, space has {space}"
        )
    if hi - lo <= 2_000_000:
        pool = np.arange(lo, hi, dtype=np.uint64)
        if used is not None and len(used):
            pool = pool[~np.isin(pool, used)]
        return rng.permutation(pool)[:n]
    out = np.empty(0, dtype=np.uint64)
    while len(out) < n:
        draw = rng.integers(lo, hi, size=max(int((n - len(out)) * 1.1) + 16, 32), dtype=np.uint64)
        cand = np.unique(np.concatenate([out, draw]))
        if used is not None and len(used):
            cand = cand[~_in_sorted(cand, used)]
        out = cand
    return rng.permutation(out)[:n]


def _in_sorted(values: np.ndarray, sorted_arr: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_arr, values)
    idx = np.clip(idx, 0, len(sorted_arr) - 1)
    return sorted_arr[idx] == values


class _IdAllocator:
    """Per-digit-class unique uid drawing for one world build."""

    def __init__(self, seed: int):
        self._seed = seed
        self._used: dict[int, np.ndarray] = {}

    def draw(self, digits: int, n: int, label: str) -> np.ndarray:
        if n == 0:
            return np.empty(0, dtype=np.uint64)
        rng = derived_rng(self._seed, "uids", digits, label)
        used = self._used.get(digits)
        ids = _draw_unique_uids(rng, digits, n, used)
        merged = ids if used is None else np.concatenate([used, ids])
        merged.sort()
        self._used[digits] = merged
        return ids

    def known_by_class(self) -> dict[int, np.ndarray]:
        return self._used


@dataclass
class _Cohort:
    spec_index: int
    digits: int
    member_ids: np.ndarray
    tweet_rate: float
    sorted_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.sorted_ids is None:
            self.sorted_ids = np.sort(self.member_ids)


class World:
    """Fully built synthetic platform.  See module docstring."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        self.seed = scenario.seed
        self.start = float(scenario.start_time)
        self.end = float(scenario.start_time + scenario.duration)
        self.now = self.start
        self._ledgers: dict[int, TargetLedger] = {}
        self._handle_to_uid: dict[str, int] = {}
        self._cohorts: list[_Cohort] = []
        self._sleepers: dict[int, SleeperMember] = {}
        self._deleted_at: dict[int, float] = {}
        self._snapshot_cache: dict[tuple[int, float], np.ndarray] = {}
        self._spike_pools: dict[tuple[int, int], np.ndarray] = {}
        self.reservoir_blocks: list[dict[str, Any]] = []
        self._build()
        self.ground_truth = GroundTruthLog(self)

    # -- construction ----------------------------------------------------

    def _build(self) -> None:
        sc = self.scenario
        alloc = self._alloc = _IdAllocator(self.seed)
        target_uids: list[int] = []
        for i, tspec in enumerate(sc.targets):
            if tspec.uid is not None:
                uid = tspec.uid
            else:
                uid = int(alloc.draw(tspec.digits, 1, f"target{i}")[0])
            target_uids.append(uid)
            self._handle_to_uid[tspec.handle] = uid

        for i, cohort in enumerate(sc.population):
            ids = alloc.draw(cohort.creation_era_digits, cohort.size, f"cohort{i}")
            self._cohorts.append(
                _Cohort(i, cohort.creation_era_digits, ids, cohort.tweet_rate)
            )

        scripts_by_target: dict[str, list[tuple[int, BehaviorScript]]] = {}
        for idx, script in enumerate(sc.behaviors):
            scripts_by_target.setdefault(script.target, []).append((idx, script))

        for ti, tspec in enumerate(sc.targets):
            uid = target_uids[ti]
            self._ledgers[uid] = self._build_target(
                ti, tspec, uid, scripts_by_target.get(tspec.handle, [])
            )

    def _build_target(
        self,
        ti: int,
        tspec: TargetSpec,
        uid: int,
        scripts: list[tuple[int, BehaviorScript]],
    ) -> TargetLedger:
        sc = self.scenario
        alloc = self._alloc
        start, end = self.start, self.end

        follow_chunks: list[np.ndarray] = []
        id_chunks: list[np.ndarray] = []
        unfollow_chunks: list[np.ndarray] = []
        source_chunks: list[np.ndarray] = []
        scripted_events: list[GTEvent] = []
        spike_windows: list[SpikeWindow] = []

        def add_chunk(ts, ids, unf, src):
            ts = np.asarray(ts, dtype=np.float64)
            follow_chunks.append(ts)
            id_chunks.append(np.asarray(ids, dtype=np.uint64))
            unfollow_chunks.append(np.asarray(unf, dtype=np.float64))
            source_chunks.append(np.full(len(ts), src, dtype=np.uint8))

        # Initial lists: each cohort pre-attaches a fraction of its members,
        # shuffled together, with synthetic pre-start follow times.
        init_ids: list[np.ndarray] = []
        for ci, cohort in enumerate(sc.population):
            n0 = int(round(cohort.initial_follow_fraction * cohort.size))
            if n0 == 0:
                continue
            rng = derived_rng(self.seed, "init_members", ti, ci)
            init_ids.append(rng.permutation(self._cohorts[ci].member_ids)[:n0])
        if tspec.initial_followers is not None:
            total = sum(len(a) for a in init_ids)
            if total < tspec.initial_followers:
                raise ConfigurationError(
                    f"targets[{ti}]: initial_followers {tspec.initial_followers} exceeds "
                    f"cohort-provided {total}"
                )
        initial = (
            derived_rng(self.seed, "init_order", ti).permutation(np.concatenate(init_ids))
            if init_ids
            else np.empty(0, dtype=np.uint64)
        )
        if tspec.initial_followers is not None:
            initial = initial[: tspec.initial_followers]

        # Reservoir scripts splice a contiguous block into the initial list,
        # measured as a depth fraction from the most-recent end.
        for si, script in scripts:
            if script.kind != "reservoir":
                continue
            classes = script.actor_digits()
            per = -(-script.cohort_size // len(classes))  # ceil split
            parts = [
                alloc.draw(d, min(per, script.cohort_size - k * per), f"reservoir{si}.{d}")
                for k, d in enumerate(classes)
                if script.cohort_size - k * per > 0
            ]
            block = derived_rng(self.seed, "reservoir_order", si).permutation(
                np.concatenate(parts)
            )
            depth_idx = int(round(script.depth_fraction * len(initial)))
            insert_at = len(initial) - depth_idx  # array is oldest-first
            initial = np.concatenate([initial[:insert_at], block, initial[insert_at:]])
            self.reservoir_blocks.append(
                {
                    "script_index": si,
                    "target": uid,
                    "size": len(block),
                    "top_offset_at_start": depth_idx,
                    "ids": block,
                }
            )
            scripted_events.append(
                GTEvent(
                    start,
                    "reservoir",
                    uid,
                    None,
                    0,
                    (("size", len(block)), ("top_offset", depth_idx)),
                )
            )

        n_init = len(initial)
        if n_init:
            # One-second spacing, most recent initial entry just before start.
            times = start - np.arange(n_init, 0, -1, dtype=np.float64)
            src = np.full(n_init, SRC_INITIAL, dtype=np.uint8)
            for blk in self.reservoir_blocks:
                if blk["target"] != uid:
                    continue
                lo = n_init - blk["top_offset_at_start"] - blk["size"]
                src[lo : lo + blk["size"]] = SRC_RESERVOIR
            follow_chunks.append(times)
            id_chunks.append(initial)
            unfollow_chunks.append(np.full(n_init, NEVER))
            source_chunks.append(src)

        # Organic follows: homogeneous Poisson per cohort toward this target.
        for ci, cohort in enumerate(sc.population):
            if cohort.organic_follow_rate <= 0:
                continue
            rng = derived_rng(self.seed, "organic_follow", ti, ci)
            expected = cohort.organic_follow_rate * (end - start)
            n_draw = int(expected + 6 * np.sqrt(expected) + 16)
            gaps = rng.exponential(1.0 / cohort.organic_follow_rate, size=n_draw)
            times = start + np.cumsum(gaps)
            while times[-1] < end:
                more = rng.exponential(1.0 / cohort.organic_follow_rate, size=n_draw)
                times = np.concatenate([times, times[-1] + np.cumsum(more)])
            times = times[times < end]
            n = len(times)
            members = self._cohorts[ci].member_ids
            init_n = int(round(cohort.initial_follow_fraction * cohort.size))
            if init_n + n > len(members):
                raise ConfigurationError(
                    f"population[{ci}]: cohort exhausted toward targets[{ti}]: "
                    f"{init_n} initial + {n} organic follows > size {len(members)}"
                )
            # The initial permutation attached the first init_n of a shuffle;
            # organic actors continue from an independent shuffle minus those.
            rng_members = derived_rng(self.seed, "init_members", ti, ci)
            order = rng_members.permutation(members)
            actors = order[init_n : init_n + n]
            add_chunk(times, actors, np.full(n, NEVER), SRC_ORGANIC)

        # Circulation scripts: members pre-follow, then cycle out/in forever.
        for si, script in scripts:
            if script.kind != "circulation":
                continue
            members = alloc.draw(
                script.actor_digits()[0], script.cohort_size, f"circulation{si}"
            )
            s0 = start + script.schedule[0]
            period = script.period
            eps = 1e-6
            for m, actor in enumerate(members):
                # Re-follows land a hair before the nominal instant so the
                # k*period cycle at exactly `duration` still counts, and
                # members at the same instant have a deterministic order.
                tie = (m + 1) * eps
                phase = script.phase_spread * period * (m / script.cohort_size)
                n_cycles = int((end - s0 - phase) // period)
                if n_cycles < 0:
                    continue
                follow_ts = s0 + phase + period * np.arange(0, n_cycles + 1) - tie
                unfollow_ts = follow_ts + period / 2.0
                follow_ts[0] = start - 1.0 - m * eps  # initial membership, pre-start
                keep = follow_ts < end
                follow_ts, unfollow_ts = follow_ts[keep], unfollow_ts[keep]
                unfollow_ts[unfollow_ts >= end] = NEVER
                ids_arr = np.full(len(follow_ts), actor, dtype=np.uint64)
                add_chunk(follow_ts, ids_arr, unfollow_ts, SRC_CIRCULATION)

        # Sleeper scripts: scripted timelines; members follow the target on wake.
        for si, script in scripts:
            if script.kind != "sleeper":
                continue
            members = alloc.draw(
                script.actor_digits()[0], script.cohort_size, f"sleeper{si}"
            )
            wake_follow_ts = []
            for m, actor in enumerate(members):
                member = self._build_sleeper(si, script, m, int(actor))
                self._sleepers[int(actor)] = member
                wake_follow_ts.append(member.wake_t + 30.0 + m * 1e-3)
                for gs, ge in member.gaps:
                    scripted_events.append(
                        GTEvent(
                            ge,
                            "sleeper_gap",
                            uid,
                            int(actor),
                            0,
                            (("gap_start", gs), ("length", ge - gs)),
                        )
                    )
            add_chunk(
                np.asarray(wake_follow_ts),
                members,
                np.full(len(members), NEVER),
                SRC_SLEEPER,
            )

        # Merge everything sorted by follow time (stable for determinism).
        if follow_chunks:
            follow_t = np.concatenate(follow_chunks)
            order = np.argsort(follow_t, kind="stable")
            follow_t = follow_t[order]
            follow_id = np.concatenate(id_chunks)[order]
            unfollow_t = np.concatenate(unfollow_chunks)[order]
            source = np.concatenate(source_chunks)[order]
        else:
            follow_t = np.empty(0)
            follow_id = np.empty(0, dtype=np.uint64)
            unfollow_t = np.empty(0)
            source = np.empty(0, dtype=np.uint8)
        unfollow_cause = np.where(
            np.isfinite(unfollow_t), UNF_CIRCULATION, UNF_NONE
        ).astype(np.uint8)

        # Organic unfollows and sawteeth need victim selection over the
        # then-live eligible entries, so they run as a sequential pass.
        selection_events: list[tuple[float, str, Any]] = []
        for ci, cohort in enumerate(sc.population):
            if cohort.organic_unfollow_rate <= 0:
                continue
            rng = derived_rng(self.seed, "organic_unfollow", ti, ci)
            t = start
            while True:
                t += float(rng.exponential(1.0 / cohort.organic_unfollow_rate))
                if t >= end:
                    break
                selection_events.append((t, "unfollow", None))
        for si, script in scripts:
            if script.kind != "sawtooth":
                continue
            for k, offset in enumerate(script.schedule):
                selection_events.append(
                    (start + offset, "sawtooth", (si, k, script))
                )
        if selection_events:
            self._apply_selection_events(
                uid,
                follow_t,
                follow_id,
                unfollow_t,
                source,
                unfollow_cause,
                selection_events,
                scripted_events,
                ti,
            )

        # Spike scripts: aggregate overlays on the count timeline.
        width = sc.spike_width
        for si, script in scripts:
            if script.kind != "spike":
                continue
            rng = derived_rng(self.seed, "spike_jitter", si)
            for k, offset in enumerate(script.schedule):
                jitter = (
                    float(rng.uniform(0.0, sc.spike_phase_jitter))
                    if sc.spike_phase_jitter > 0
                    else 0.0
                )
                t0 = start + offset + jitter
                t1 = t0 + width
                mag = script.magnitude
                spike_windows.append(SpikeWindow(t0, t1, mag, si))
                scripted_events.append(
                    GTEvent(t0, "spike", uid, None, mag, (("edge", "rise"),))
                )
                scripted_events.append(
                    GTEvent(t1, "spike", uid, None, -mag, (("edge", "fall"),))
                )

        # Count timeline: +-1 per edge plus aggregate spike deltas.
        ct_parts = [follow_t]
        cd_parts = [np.ones(len(follow_t), dtype=np.int64)]
        finite = np.isfinite(unfollow_t)
        ct_parts.append(unfollow_t[finite])
        cd_parts.append(np.full(int(finite.sum()), -1, dtype=np.int64))
        for w in spike_windows:
            ct_parts.append(np.asarray([w.t_start, w.t_end]))
            cd_parts.append(np.asarray([w.magnitude, -w.magnitude], dtype=np.int64))
        ct = np.concatenate(ct_parts)
        cd = np.concatenate(cd_parts)
        order = np.argsort(ct, kind="stable")
        count_times = ct[order]
        count_values = np.cumsum(cd[order])
        if np.any(count_values < 0):
            raise ConfigurationError(
                f"targets[{ti}]: scenario drives follower count negative"
            )

        unfollow_sorted = np.sort(unfollow_t[finite])
        scripted_events.sort(key=lambda e: (e.t, e.kind))
        return TargetLedger(
            uid=uid,
            handle=tspec.handle,
            category=tspec.category,
            follow_t=follow_t,
            follow_id=follow_id,
            unfollow_t=unfollow_t,
            source=source,
            unfollow_cause=unfollow_cause,
            count_times=count_times,
            count_values=count_values,
            unfollow_sorted=unfollow_sorted,
            spike_windows=sorted(spike_windows, key=lambda w: w.t_start),
            scripted_events=scripted_events,
        )

    def _apply_selection_events(
        self,
        uid: int,
        follow_t: np.ndarray,
        follow_id: np.ndarray,
        unfollow_t: np.ndarray,
        source: np.ndarray,
        unfollow_cause: np.ndarray,
        selection_events: list[tuple[float, str, Any]],
        scripted_events: list[GTEvent],
        ti: int,
    ) -> None:
        """Assign victims for organic unfollows and sawteeth, in time order.

        Victims are drawn from live initial/organic entries only; scripted
        cohorts keep their own schedules so their ground truth stays exact.
        """
        selection_events.sort(key=lambda e: (e[0], e[1]))
        rng = derived_rng(self.seed, "victims", ti)
        eligible = (source == SRC_INITIAL) | (source == SRC_ORGANIC)
        pool: list[int] = []  # entry indices, append order == follow order
        feed = np.flatnonzero(eligible)
        feed_pos = 0
        for t, kind, payload in selection_events:
            while feed_pos < len(feed) and follow_t[feed[feed_pos]] <= t:
                pool.append(int(feed[feed_pos]))
                feed_pos += 1
            if kind == "unfollow":
                victim = self._pop_victim(pool, rng, "random")
                if victim is None:
                    continue
                unfollow_t[victim] = t
                unfollow_cause[victim] = UNF_ORGANIC
            else:
                si, k, script = payload
                want = -script.magnitude
                victims = []
                for _ in range(want):
                    v = self._pop_victim(pool, rng, "random")
                    if v is None:
                        break
                    victims.append(v)
                realized = len(victims)
                for v in victims:
                    unfollow_t[v] = t
                    unfollow_cause[v] = UNF_SAWTOOTH
                    if script.platform_deletion:
                        self._deleted_at[int(follow_id[v])] = t
                scripted_events.append(
                    GTEvent(
                        t,
                        "sawtooth",
                        uid,
                        None,
                        -realized,
                        (
                            ("requested", -want),
                            ("truncated", realized < want),
                            ("cause", "deletion" if script.platform_deletion else "unfollow"),
                        ),
                    )
                )

    @staticmethod
    def _pop_victim(pool: list[int], rng: np.random.Generator, mode: str) -> int | None:
        if not pool:
            return None
        if mode == "recent":
            return pool.pop()
        j = int(rng.integers(0, len(pool)))
        pool[j], pool[-1] = pool[-1], pool[j]
        return pool.pop()

    def _build_sleeper(
        self, si: int, script: BehaviorScript, m: int, uid: int
    ) -> SleeperMember:
        """Scripted timeline: bursts separated by the configured gap chain."""
        rng = derived_rng(self.seed, "sleeper", si, m)
        wake = int(self.start + script.schedule[m % len(script.schedule)])
        burst_n = 4
        burst_spacing = 6 * 3600  # within-burst tweet spacing, << any gap

        def jittered(g: float) -> int:
            if script.gap_jitter > 0:
                g = g * (1.0 + float(rng.uniform(-script.gap_jitter, script.gap_jitter)))
            return int(round(g))

        gaps_newest_first = [jittered(script.gap)] + [
            jittered(g) for g in reversed(script.history_gaps)
        ]
        tweets: list[int] = []
        gap_pairs: list[tuple[int, int]] = []
        t_end = wake
        for g in gaps_newest_first:
            gap_end = t_end
            gap_start = gap_end - g
            gap_pairs.append((gap_start, gap_end))
            burst = [gap_start - j * burst_spacing for j in range(burst_n)]
            tweets.extend(burst)
            t_end = burst[-1]
        # Post-wake resumption.
        post = [wake + j * 4 * 3600 for j in range(6)]
        tweets.extend(post)
        arr = np.array(sorted(tweets), dtype=np.int64)
        if arr[0] < 0:
            raise ConfigurationError(
                f"behaviors[{si}]: sleeper history reaches before the epoch"
            )
        gap_pairs = sorted(gap_pairs)
        return SleeperMember(uid=uid, wake_t=wake, tweets=arr, gaps=gap_pairs)

    # -- time ------------------------------------------------------------

    def advance(self, until: float) -> None:
        if until < self.now:
            raise ValidationError(f"cannot rewind world from {self.now} to {until}")
        self.now = until

    def step(self, until: float) -> list[GTEvent]:
        """Advance the watermark; returns ground-truth events in (prev, until]."""
        if until <= self.now:
            raise ValidationError("step requires until > world.now")
        prev = self.now
        self.advance(until)
        return [
            ev
            for ev in self.ground_truth.iter_events(t_range=(prev, until))
            if ev.t > prev
        ]

    # -- lookups ---------------------------------------------------------

    def ledger(self, target: int) -> TargetLedger:
        try:
            return self._ledgers[target]
        except KeyError:
            raise UnknownEntityError(f"unknown target {target}") from None

    def ledgers(self) -> list[TargetLedger]:
        return list(self._ledgers.values())

    @property
    def target_uids(self) -> list[int]:
        return list(self._ledgers)

    def watched_users(self) -> list[WatchedUser]:
        return [
            WatchedUser(uid=l.uid, handle=l.handle, category=l.category)
            for l in self._ledgers.values()
        ]

    def uid_for_handle(self, handle: str) -> int:
        try:
            return self._handle_to_uid[handle]
        except KeyError:
            raise UnknownEntityError(f"unknown target handle {handle!r}") from None

    def cohort_member_ids(self, index: int) -> np.ndarray:
        return self._cohorts[index].member_ids

    def sleeper_member(self, uid: int) -> SleeperMember | None:
        return self._sleepers.get(uid)

    def sleeper_members(self) -> dict[int, SleeperMember]:
        return self._sleepers

    def ancient_population_size(self, threshold_digits: int = 8) -> int:
        from .scenario import ancient_population

        return ancient_population(self.scenario, threshold_digits)

    def account_exists(self, uid: int) -> bool:
        if uid in self._ledgers or uid in self._sleepers:
            return True
        try:
            d = digit_count(uid)
        except ValidationError:
            return False
        arr = self._alloc.known_by_class().get(d)
        return (
            arr is not None
            and len(arr) > 0
            and bool(_in_sorted(np.asarray([uid], dtype=np.uint64), arr)[0])
        )

    # -- queries ---------------------------------------------------------

    def follower_count(self, target: int, t: float | None = None) -> int:
        t = self.now if t is None else t
        if t > self.now:
            raise ValidationError(f"query at t={t} ahead of world.now={self.now}")
        return self.ledger(target).count_at(t)

    # Prefix snapshots are padded so a two-page recent-window sample hits
    # the cache; anything deeper materializes the full live list once.
    _PREFIX_PAD = 20_000

    def _snapshot(self, ledger: TargetLedger, snap: float, need: int | None) -> np.ndarray:
        key = (ledger.uid, snap)
        cached = self._snapshot_cache.get(key)
        if cached is not None:
            is_full, ids = cached
            if is_full or (need is not None and len(ids) >= need):
                return ids
        if need is None or need > self._PREFIX_PAD:
            ids = ledger.live_prefix(snap, None)
            is_full = True
        else:
            ids = ledger.live_prefix(snap, self._PREFIX_PAD)
            is_full = len(ids) < self._PREFIX_PAD
        if len(self._snapshot_cache) > 4:
            self._snapshot_cache.clear()
        self._snapshot_cache[key] = (is_full, ids)
        return ids

    def _spike_pool(self, ledger: TargetLedger, window_idx: int, size: int) -> np.ndarray:
        key = (ledger.uid, window_idx)
        pool = self._spike_pools.get(key)
        if pool is None or len(pool) < size:
            rng = derived_rng(self.seed, "spike_pool", ledger.uid, window_idx)
            lo, hi = uid_range_for_digits(19)
            pool = rng.integers(lo, hi, size=size, dtype=np.uint64)
            self._spike_pools[key] = pool
        return pool[:size]

    def follower_page(
        self,
        target: int,
        cursor: PageCursor | None = None,
        page_size: int = 5000,
        at: float | None = None,
    ) -> tuple[list[int], PageCursor | None]:
        """One page of follower ids, most-recent-first.

        With `freeze_pages` (default) the first page freezes a snapshot
        and later cursors page through it; otherwise cursors are
        invalidated by any unfollow since the cursor was minted.
        """
        at = self.now if at is None else at
        if at > self.now:
            raise ValidationError(f"query at t={at} ahead of world.now={self.now}")
        ledger = self.ledger(target)
        frozen = self.scenario.freeze_pages
        if cursor is None:
            snap = at
            offset = 0
            version = ledger.unfollows_until(at)
        else:
            if cursor.target != target:
                raise ValidationError("cursor target mismatch")
            if not cursor.frozen:
                version = ledger.unfollows_until(at)
                if version != cursor.version:
                    raise CursorInvalidated(
                        f"follower list of {target} mutated under live cursor"
                    )
                snap = at
            else:
                version = cursor.version
                snap = cursor.snapshot_t
            offset = cursor.offset
            frozen = cursor.frozen

        # Positive spikes inject synthetic actors at the list head; negative
        # spikes pull their dip from the oldest end, so the count shrinks but
        # the recent window stays undisturbed (the reduced total truncates
        # the tail automatically).
        total = ledger.count_at(snap)
        overlay_pos: list[np.ndarray] = []
        for w_idx, w in enumerate(ledger.spike_windows):
            if w.t_start <= snap < w.t_end and w.magnitude > 0:
                overlay_pos.append(self._spike_pool(ledger, w_idx, w.magnitude))
        n_over = sum(len(a) for a in overlay_pos)

        ids: list[int] = []
        pos = offset
        remaining = min(page_size, max(0, total - offset))
        # Synthetic spike actors occupy the most-recent positions.
        while remaining > 0 and pos < n_over:
            block = 0
            for arr in overlay_pos:
                if pos < block + len(arr):
                    take = min(remaining, block + len(arr) - pos)
                    ids.extend(int(x) for x in arr[pos - block : pos - block + take])
                    pos += take
                    remaining -= take
                    break
                block += len(arr)
        if remaining > 0:
            real_off = pos - n_over
            prefix = self._snapshot(ledger, snap, real_off + remaining)
            chunk = prefix[real_off : real_off + remaining]
            ids.extend(int(x) for x in chunk)
            pos += len(chunk)

        if self.scenario.ordering_noise > 0 and len(ids) > 1:
            rng = derived_rng(
                self.seed, "page_noise", target, round(snap, 6), offset
            )
            p = self.scenario.ordering_noise
            flips = rng.random(len(ids) - 1)
            for i in range(len(ids) - 1):
                if flips[i] < p:
                    ids[i], ids[i + 1] = ids[i + 1], ids[i]

        next_cursor = None
        if offset + len(ids) < total:
            next_cursor = PageCursor(
                target=target,
                snapshot_t=snap,
                offset=offset + len(ids),
                version=version,
                frozen=frozen,
            )
        return ids, next_cursor

    def timeline(self, uid: int, at: float | None = None) -> list[int]:
        """Chronological tweet timestamps up to the query time."""
        at = self.now if at is None else at
        member = self._sleepers.get(uid)
        if member is not None:
            return [int(t) for t in member.tweets[member.tweets <= at]]
        cohort = self._cohort_of(uid)
        if cohort is None:
            if uid in self._ledgers:
                return []
            raise UnknownEntityError(f"unknown account {uid}")
        if cohort.tweet_rate <= 0:
            return []
        rng = derived_rng(self.seed, "timeline", uid)
        rate = cohort.tweet_rate / 86400.0
        span = self.end - self.start
        n = rng.poisson(rate * span)
        ts = np.sort(rng.uniform(self.start, self.end, size=n)).astype(np.int64)
        ts = np.unique(ts)
        return [int(t) for t in ts[ts <= at]]

    def _cohort_of(self, uid: int) -> _Cohort | None:
        probe = np.asarray([uid], dtype=np.uint64)
        for cohort in self._cohorts:
            if len(cohort.sorted_ids) and bool(_in_sorted(probe, cohort.sorted_ids)[0]):
                return cohort
        return None

    def hydrate(
        self, ids: Iterable[int], at: float | None = None
    ) -> tuple[list[dict[str, Any]], list[int]]:
        """Resolve ids into user records; unresolvable ids returned separately."""
        at = self.now if at is None else at
        records: list[dict[str, Any]] = []
        unresolved: list[int] = []
        for uid in ids:
            uid = int(uid)
            deleted = self._deleted_at.get(uid)
            if (deleted is not None and deleted <= at) or not self.account_exists(uid):
                unresolved.append(uid)
                continue
            rng = derived_rng(self.seed, "profile", uid)
            records.append(
                {
                    "id": uid,
                    "digits": digit_count(uid),
                    "verified": bool(rng.random() < 0.001),
                    "protected": bool(rng.random() < 0.02),
                }
            )
        return records, unresolved


def build_world(scenario: Scenario) -> World:
    return World(scenario)
