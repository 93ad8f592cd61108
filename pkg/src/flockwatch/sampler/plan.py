"""Sample plans: what to watch and how deep to look."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..domain import ConfigurationError


@dataclass(frozen=True)
class SamplePlan:
    watchlist: tuple[str, ...]  # target handles
    recent_window: int = 10_000
    page_size: int = 5_000
    tunnel_targets: tuple[str, ...] = ()
    ancient_registry: tuple[int, ...] = ()  # pre-seeded registry members
    ancient_threshold_digits: int = 8
    count_polling: bool = True
    recent_sampling: bool = True
    timeline_polling: bool = True
    hydrate_tunnels: bool = True

    def validate(self) -> "SamplePlan":
        if not self.watchlist:
            raise ConfigurationError("plan watchlist must be non-empty")
        if self.page_size <= 0:
            raise ConfigurationError("plan page_size must be > 0")
        if self.recent_window % self.page_size != 0:
            raise ConfigurationError(
                f"recent_window {self.recent_window} must be a multiple of "
                f"page_size {self.page_size}"
            )
        unknown = set(self.tunnel_targets) - set(self.watchlist)
        if unknown:
            raise ConfigurationError(f"tunnel targets not on watchlist: {sorted(unknown)}")
        return self

    @property
    def pages_per_sample(self) -> int:
        return self.recent_window // self.page_size


def load_plan(path: str | Path) -> SamplePlan:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"plan file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    known = set(SamplePlan.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown plan fields {sorted(unknown)}")
    for key in ("watchlist", "tunnel_targets", "ancient_registry"):
        if key in doc and isinstance(doc[key], list):
            doc[key] = tuple(doc[key])
    return SamplePlan(**doc).validate()
