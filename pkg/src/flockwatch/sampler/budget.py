"""Rate budgets and the virtual-time limiter that enforces them.

Each request class gets an evenly spaced issue grid derived from its
budget (e.g. 15 pages per 15-minute window => one page every 60 s).
Even spacing makes sliding-window compliance provable: a grid with
spacing `window/N` can never put more than N requests into any window.
Every issued request is logged so compliance can be asserted after the
fact rather than trusted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..domain import ConfigurationError

REQUEST_KINDS = ("count", "page", "timeline", "hydration")


@dataclass(frozen=True)
class RateBudget:
    count_lookups_per_second: float = 1.0
    follower_pages_per_window: int = 15
    timeline_fetches_per_window: int = 900
    hydrate_requests_per_window: int = 900
    hydrate_batch_size: int = 100
    window_seconds: float = 900.0

    def validate(self) -> "RateBudget":
        for name in (
            "count_lookups_per_second",
            "follower_pages_per_window",
            "timeline_fetches_per_window",
            "hydrate_requests_per_window",
            "hydrate_batch_size",
            "window_seconds",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"budget {name} must be > 0")
        return self

    def interval(self, kind: str) -> float:
        if kind == "count":
            return 1.0 / self.count_lookups_per_second
        if kind == "page":
            return self.window_seconds / self.follower_pages_per_window
        if kind == "timeline":
            return self.window_seconds / self.timeline_fetches_per_window
        if kind == "hydration":
            return self.window_seconds / self.hydrate_requests_per_window
        raise ConfigurationError(f"unknown request kind {kind!r}")

    def limit_per_window(self, kind: str) -> float:
        if kind == "count":
            return self.count_lookups_per_second * self.window_seconds
        if kind == "page":
            return float(self.follower_pages_per_window)
        if kind == "timeline":
            return float(self.timeline_fetches_per_window)
        if kind == "hydration":
            return float(self.hydrate_requests_per_window)
        raise ConfigurationError(f"unknown request kind {kind!r}")


def load_budget(path: str | Path) -> RateBudget:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"budget file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    known = set(RateBudget.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown budget fields {sorted(unknown)}")
    return RateBudget(**doc).validate()


@dataclass
class RequestLog:
    """Chronology of issued requests, for after-the-fact compliance checks."""

    entries: list[tuple[float, str]] = field(default_factory=list)

    def record(self, t: float, kind: str) -> None:
        self.entries.append((t, kind))

    def times(self, kind: str) -> list[float]:
        return sorted(t for t, k in self.entries if k == kind)

    def max_in_window(self, kind: str, window: float) -> int:
        """Largest request count over any sliding half-open window."""
        times = self.times(kind)
        worst = 0
        lo = 0
        for hi, t in enumerate(times):
            while times[lo] <= t - window:
                lo += 1
            worst = max(worst, hi - lo + 1)
        return worst

    def assert_compliance(self, budget: RateBudget) -> None:
        for kind in REQUEST_KINDS:
            observed = self.max_in_window(kind, budget.window_seconds)
            allowed = budget.limit_per_window(kind)
            if observed > allowed:
                raise AssertionError(
                    f"budget violated for {kind}: {observed} requests in one "
                    f"{budget.window_seconds:.0f}s window, limit {allowed}"
                )


class Limiter:
    """Single-owner issue-time scheduler for one request kind."""

    def __init__(self, kind: str, budget: RateBudget, start: float, log: RequestLog):
        self.kind = kind
        self.interval = budget.interval(kind)
        self.next_free = start
        self._log = log

    def peek(self) -> float:
        return self.next_free

    def acquire(self) -> float:
        t = self.next_free
        self.next_free = t + self.interval
        self._log.record(t, self.kind)
        return t
