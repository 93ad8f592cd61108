"""Connector interface between samplers and a platform.

The simulator implements it directly; a live-platform adapter would too.
Every call carries the virtual time `at` assigned by the budget
scheduler; the simulated connector advances the world watermark to that
time before answering, so reads are monotone and never retroactive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Protocol

from .world import PageCursor, World


class ConnectorError(RuntimeError):
    """The connector could not serve the request (transient)."""


class Connector(Protocol):
    def get_count(self, target: int, at: float) -> int: ...

    def get_follower_page(
        self, target: int, cursor: PageCursor | None, page_size: int, at: float
    ) -> tuple[list[int], PageCursor | None]: ...

    def get_timeline(self, uid: int, at: float) -> list[int]: ...

    def hydrate(
        self, ids: Iterable[int], at: float
    ) -> tuple[list[dict[str, Any]], list[int]]: ...


@dataclass
class SimConnector:
    """World-backed connector with optional outage injection.

    `outages` is a list of (t_start, t_end) virtual-time windows during
    which every request fails with ConnectorError, for exercising the
    samplers' gap handling.
    """

    world: World
    outages: list[tuple[float, float]] = field(default_factory=list)
    requests: int = 0

    def _check(self, at: float) -> None:
        self.requests += 1
        self.world.advance(max(self.world.now, at))
        for t0, t1 in self.outages:
            if t0 <= at < t1:
                raise ConnectorError(f"connector outage at t={at:.3f}")

    def get_count(self, target: int, at: float) -> int:
        self._check(at)
        return self.world.follower_count(target, at)

    def get_follower_page(
        self,
        target: int,
        cursor: PageCursor | None = None,
        page_size: int = 5000,
        at: float = 0.0,
    ) -> tuple[list[int], PageCursor | None]:
        self._check(at)
        return self.world.follower_page(target, cursor, page_size, at)

    def get_timeline(self, uid: int, at: float) -> list[int]:
        self._check(at)
        return self.world.timeline(uid, at)

    def hydrate(
        self, ids: Iterable[int], at: float
    ) -> tuple[list[dict[str, Any]], list[int]]:
        self._check(at)
        return self.world.hydrate(ids, at)
