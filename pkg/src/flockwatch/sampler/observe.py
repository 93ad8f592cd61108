"""Budget-bound observation of a platform through a connector.

Count polling and recent-follower cycling interleave on one virtual
clock, each gated by its own limiter, so the request pattern (and hence
every log byte) is a pure function of (plan, budget, world).  Tunnels
and timeline polling run after the polling window with the same
limiters, mirroring how the corresponding measurement campaigns ran as
separate passes.

Nothing is ever fabricated: a failed request is recorded as a gap and
polling moves on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import inf
from typing import Any

import numpy as np

from ..detectors.types import CountSeries, FollowerSample
from ..domain import ConfigurationError, digit_counts
from ..simulator.connector import Connector, ConnectorError
from ..simulator.world import CursorInvalidated, PageCursor
from ..store import Record, Store
from .budget import Limiter, RateBudget, RequestLog
from .plan import SamplePlan

logger = logging.getLogger(__name__)


@dataclass
class ObservationRun:
    """One observation session against one connector."""

    connector: Connector
    plan: SamplePlan
    budget: RateBudget
    handles: dict[str, int]  # watchlist handle -> account id
    start: float
    store: Store | None = None
    registry: set[int] = field(default_factory=set)
    request_log: RequestLog = field(default_factory=RequestLog)

    def __post_init__(self):
        self.plan.validate()
        self.budget.validate()
        missing = [h for h in self.plan.watchlist if h not in self.handles]
        if missing:
            raise KeyError(f"plan watchlist handles not resolvable: {missing}")
        self.registry.update(self.plan.ancient_registry)
        if (
            self.plan.count_polling
            and self.budget.count_lookups_per_second > len(self.plan.watchlist)
        ):
            # One sample per second per account is the resolution ceiling;
            # sub-second per-target cadence would collide integer stamps.
            raise ConfigurationError(
                "count budget exceeds 1 lookup/second per watched target"
            )
        self._count_limiter = Limiter("count", self.budget, self.start, self.request_log)
        self._page_limiter = Limiter("page", self.budget, self.start, self.request_log)
        self._timeline_limiter = Limiter(
            "timeline", self.budget, self.start, self.request_log
        )
        self._hydrate_limiter = Limiter(
            "hydration", self.budget, self.start, self.request_log
        )

    def _uid(self, handle: str) -> int:
        return self.handles[handle]

    def _sync_clocks(self) -> None:
        """Later phases (tunnels, timelines, hydration) start no earlier than
        anything already issued; measurement campaigns run as sequential
        passes on one virtual clock."""
        now = max(
            self._count_limiter.peek(),
            self._page_limiter.peek(),
            self._timeline_limiter.peek(),
            self._hydrate_limiter.peek(),
        )
        for limiter in (
            self._count_limiter,
            self._page_limiter,
            self._timeline_limiter,
            self._hydrate_limiter,
        ):
            limiter.next_free = max(limiter.next_free, now)

    def _put(self, stream: str, t: float, target: int | None, payload: dict[str, Any]):
        if self.store is not None:
            self.store.append(Record(t=int(t), stream=stream, target=target, payload=payload))

    # -- E1 + E2: interleaved polling window ------------------------------

    def poll(self, duration: float) -> tuple[dict[int, CountSeries], dict[int, list[FollowerSample]]]:
        """Run count polling and recent-follower cycling for `duration` seconds."""
        end = self.start + duration
        watch = [self._uid(h) for h in self.plan.watchlist]
        counts: dict[int, list[tuple[int, int]]] = {uid: [] for uid in watch}
        gaps: dict[int, list[tuple[int, str]]] = {uid: [] for uid in watch}
        samples: dict[int, list[FollowerSample]] = {uid: [] for uid in watch}

        counting = self.plan.count_polling
        sampling = self.plan.recent_sampling
        k_count = 0
        cycle = 0
        widx = 0
        pages: list[tuple[float, list[int]]] = []
        cursor: PageCursor | None = None
        dropped = False

        while True:
            t_count = self._count_limiter.peek() if counting else inf
            t_page = self._page_limiter.peek() if sampling else inf
            if min(t_count, t_page) >= end:
                break
            if t_count <= t_page:
                uid = watch[k_count % len(watch)]
                k_count += 1
                t = self._count_limiter.acquire()
                try:
                    c = self.connector.get_count(uid, t)
                    counts[uid].append((int(t), c))
                    self._put("counts", t, uid, {"count": c, "t_exact": t})
                except ConnectorError as exc:
                    gaps[uid].append((int(t), str(exc)))
                    self._put(
                        "counts", t, uid,
                        {"count": None, "gap": str(exc), "t_exact": t},
                    )
            else:
                uid = watch[widx]
                t = self._page_limiter.acquire()
                try:
                    ids, cursor = self.connector.get_follower_page(
                        uid, cursor, self.plan.page_size, t
                    )
                    pages.append((t, ids))
                except CursorInvalidated as exc:
                    logger.info("sample discarded (%s): %s", uid, exc)
                    pages.append((t, []))
                    dropped = True
                    cursor = None
                except ConnectorError as exc:
                    logger.info("sample page lost (%s): %s", uid, exc)
                    pages.append((t, []))
                    dropped = True
                    cursor = None
                done = dropped or cursor is None or len(pages) >= self.plan.pages_per_sample
                if done:
                    sample = self._finish_sample(uid, cycle, pages, dropped)
                    if not sample.discarded:
                        samples[uid].append(sample)
                    pages, cursor, dropped = [], None, False
                    widx += 1
                    if widx == len(watch):
                        widx = 0
                        cycle += 1

        series = {
            uid: CountSeries(
                target=uid,
                times=tuple(t for t, _ in counts[uid]),
                counts=tuple(c for _, c in counts[uid]),
                gaps=tuple(gaps[uid]),
            )
            for uid in watch
        }
        return series, samples

    def _finish_sample(
        self, uid: int, cycle: int, pages: list[tuple[float, list[int]]], dropped: bool
    ) -> FollowerSample:
        ids: list[int] = []
        for _, page in pages:
            ids.extend(page)
        ids = ids[: self.plan.recent_window]
        sample = FollowerSample(
            target=uid,
            t=int(pages[0][0]),
            cycle=cycle,
            ids=tuple(ids),
            page_times=tuple(t for t, _ in pages),
            discarded=dropped,
        )
        if not dropped:
            self._admit_ancient(ids)
        self._put(
            "follower_sample",
            pages[0][0],
            uid,
            {
                "cycle": cycle,
                "pages": [{"t": t, "ids": page} for t, page in pages],
                "discarded": dropped,
            },
        )
        return sample

    def _admit_ancient(self, ids: list[int]) -> None:
        if not ids:
            return
        arr = np.asarray(ids, dtype=np.uint64)
        ancient = arr[digit_counts(arr) <= self.plan.ancient_threshold_digits]
        self.registry.update(int(x) for x in ancient)

    # -- E4: tunneling and hydration --------------------------------------

    def tunnel_followers(self, handle: str) -> list[int]:
        """Exhaustively page out one follower list, checkpointed in the store.

        A re-run resumes from the last stored page of the same frozen
        snapshot; a cursor invalidated by live-list mutation restarts the
        tunnel from a fresh snapshot (readers keep the last complete run).
        """
        uid = self._uid(handle)
        self._sync_clocks()
        ids, cursor, page_index = self._resume_state(uid)
        while True:
            t = self._page_limiter.acquire()
            try:
                page, next_cursor = self.connector.get_follower_page(
                    uid, cursor, self.plan.page_size, t
                )
            except CursorInvalidated as exc:
                logger.warning("tunnel restarted (%s): %s", handle, exc)
                ids, cursor, page_index = [], None, 0
                continue
            snap = cursor.snapshot_t if cursor is not None else t
            self._put(
                "tunnel_page",
                t,
                uid,
                {
                    "page_index": page_index,
                    "ids": page,
                    "cursor_offset": len(ids),
                    "snapshot_t": snap,
                },
            )
            ids.extend(page)
            page_index += 1
            if next_cursor is None:
                return ids
            cursor = next_cursor

    def _resume_state(self, uid: int) -> tuple[list[int], PageCursor | None, int]:
        if self.store is None:
            return [], None, 0
        pages = [r for r in self.store.scan("tunnel_page", target=uid)]
        if not pages:
            return [], None, 0
        # Keep only the most recent tunnel run (page_index restarts at 0).
        last_start = max(i for i, r in enumerate(pages) if r.payload["page_index"] == 0)
        run = pages[last_start:]
        ids = [i for r in run for i in r.payload["ids"]]
        snap = run[0].payload["snapshot_t"]
        cursor = PageCursor(
            target=uid, snapshot_t=snap, offset=len(ids), version=0, frozen=True
        )
        return ids, cursor, run[-1].payload["page_index"] + 1

    def hydrate_ids(self, ids: list[int]) -> tuple[list[dict[str, Any]], list[int]]:
        """Resolve ids in budgeted batches; partial results are the contract."""
        if not ids:
            raise ValueError("hydrate requires a non-empty id list")
        self._sync_clocks()
        records: list[dict[str, Any]] = []
        unresolved: list[int] = []
        size = self.budget.hydrate_batch_size
        for i in range(0, len(ids), size):
            batch = ids[i : i + size]
            t = self._hydrate_limiter.acquire()
            try:
                got, missing = self.connector.hydrate(batch, t)
            except ConnectorError as exc:
                logger.info("hydration batch lost: %s", exc)
                continue
            records.extend(got)
            unresolved.extend(missing)
            self._put(
                "hydration",
                t,
                None,
                {"records": got, "unresolved": missing},
            )
        return records, unresolved

    # -- E3: timeline cycling ---------------------------------------------

    def poll_timelines(self, accounts: list[int] | None = None) -> dict[int, list[int]]:
        """Fetch timelines for the ancient registry (or an explicit list)."""
        uids = sorted(self.registry) if accounts is None else list(accounts)
        self._sync_clocks()
        out: dict[int, list[int]] = {}
        for uid in uids:
            t = self._timeline_limiter.acquire()
            try:
                tweets = self.connector.get_timeline(uid, t)
            except ConnectorError as exc:
                logger.info("timeline fetch lost (%d): %s", uid, exc)
                continue
            out[uid] = tweets
            self._put("timeline", t, None, {"account": uid, "tweets": tweets})
        return out


# -- spec-level convenience wrappers --------------------------------------


def poll_counts(
    plan: SamplePlan,
    budget: RateBudget,
    connector: Connector,
    handles: dict[str, int],
    start: float,
    duration: float,
    store: Store | None = None,
) -> dict[int, CountSeries]:
    run = ObservationRun(
        connector,
        SamplePlan(
            watchlist=plan.watchlist,
            recent_window=plan.recent_window,
            page_size=plan.page_size,
            count_polling=True,
            recent_sampling=False,
        ),
        budget,
        handles,
        start,
        store,
    )
    series, _ = run.poll(duration)
    return series


def sample_recent_followers(
    plan: SamplePlan,
    budget: RateBudget,
    connector: Connector,
    handles: dict[str, int],
    start: float,
    duration: float,
    store: Store | None = None,
) -> tuple[dict[int, list[FollowerSample]], ObservationRun]:
    run = ObservationRun(
        connector,
        SamplePlan(
            watchlist=plan.watchlist,
            recent_window=plan.recent_window,
            page_size=plan.page_size,
            ancient_threshold_digits=plan.ancient_threshold_digits,
            count_polling=False,
            recent_sampling=True,
        ),
        budget,
        handles,
        start,
        store,
    )
    _, samples = run.poll(duration)
    return samples, run
