"""Scenario schema: the declarative input to the synthetic platform.

A scenario pins a seed, a population of organic cohorts, a watch-worthy
target set, and a list of scripted behaviors (spikes, sawteeth,
circulating cohorts, sleepers, reservoirs).  Everything downstream is a
pure function of this object, so identical scenarios produce identical
worlds byte for byte.

Schedules and durations are in seconds relative to `start_time` (absolute
epoch seconds); the default start is 2020-01-01 UTC.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from ..domain import (
    CATEGORIES,
    MAX_DIGITS,
    MIN_DIGITS,
    ConfigurationError,
    validate_uid,
)

BEHAVIOR_KINDS = ("spike", "sawtooth", "circulation", "sleeper", "reservoir")

DEFAULT_START_TIME = 1577836800  # 2020-01-01T00:00:00Z


@dataclass(frozen=True)
class PopulationCohort:
    """A pool of organically behaving accounts in one uid digit class.

    Rates are per target: every watched target receives follows at
    `organic_follow_rate` per second from this cohort, drawn from members
    that do not already follow it.  `initial_follow_fraction` of the
    cohort pre-follows each target when the world is built.
    """

    size: int
    creation_era_digits: int
    organic_follow_rate: float = 0.0
    organic_unfollow_rate: float = 0.0
    tweet_rate: float = 0.0  # tweets per day, over the simulated window
    initial_follow_fraction: float = 0.0

    def validate(self, where: str) -> None:
        if self.size < 0:
            raise ConfigurationError(f"{where}: cohort size must be >= 0")
        if not (MIN_DIGITS <= self.creation_era_digits <= MAX_DIGITS):
            raise ConfigurationError(
                f"{where}: creation_era_digits {self.creation_era_digits} outside [2, 19]"
            )
        for name in ("organic_follow_rate", "organic_unfollow_rate", "tweet_rate"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{where}: {name} must be >= 0")
        if not (0.0 <= self.initial_follow_fraction <= 1.0):
            raise ConfigurationError(f"{where}: initial_follow_fraction outside [0, 1]")


@dataclass(frozen=True)
class BehaviorScript:
    """One scripted bot behavior against one target.

    Field use by kind:
      spike        magnitude (signed, != 0), schedule = event times
      sawtooth     magnitude (< 0), schedule = event times,
                   platform_deletion selects mass-unfollow vs deletion
      circulation  cohort_size members re-follow every `period` seconds,
                   schedule = [start time]
      sleeper      cohort_size silent accounts; schedule = wake times
                   (member m wakes at schedule[m % len]); `gap` is the
                   final silence length, `history_gaps` older silences
      reservoir    cohort_size accounts pre-embedded as one contiguous
                   block at depth_fraction of the target's initial list
    """

    kind: str
    target: str
    cohort_size: int = 0
    schedule: tuple[float, ...] = ()
    magnitude: int = 0
    period: float = 0.0
    gap: float = 0.0
    depth_fraction: float = 0.0
    digits: tuple[int, ...] = ()
    platform_deletion: bool = False
    history_gaps: tuple[float, ...] = ()
    gap_jitter: float = 0.0
    phase_spread: float = 0.0  # circulation: stagger members across the period

    def validate(self, where: str, duration: float) -> None:
        if self.kind not in BEHAVIOR_KINDS:
            raise ConfigurationError(f"{where}: unknown behavior kind {self.kind!r}")
        if not self.schedule:
            raise ConfigurationError(f"{where}: schedule must be non-empty")
        if list(self.schedule) != sorted(self.schedule):
            raise ConfigurationError(f"{where}: schedule must be sorted")
        if self.schedule[0] < 0 or self.schedule[-1] > duration:
            raise ConfigurationError(f"{where}: schedule outside [0, duration]")
        for d in self.digits:
            if not (MIN_DIGITS <= d <= MAX_DIGITS):
                raise ConfigurationError(f"{where}: digit class {d} outside [2, 19]")
        kind = self.kind
        if kind == "spike":
            if self.magnitude == 0:
                raise ConfigurationError(f"{where}: spike magnitude must be non-zero")
        elif kind == "sawtooth":
            if self.magnitude >= 0:
                raise ConfigurationError(f"{where}: sawtooth magnitude must be < 0")
        elif kind == "circulation":
            if self.cohort_size <= 0:
                raise ConfigurationError(f"{where}: circulation cohort_size must be > 0")
            if self.period <= 0:
                raise ConfigurationError(f"{where}: circulation period must be > 0")
            if not (0.0 <= self.phase_spread <= 1.0):
                raise ConfigurationError(f"{where}: phase_spread outside [0, 1]")
        elif kind == "sleeper":
            if self.cohort_size <= 0:
                raise ConfigurationError(f"{where}: sleeper cohort_size must be > 0")
            if self.gap <= 0:
                raise ConfigurationError(f"{where}: sleeper gap must be > 0")
            if any(g <= 0 for g in self.history_gaps):
                raise ConfigurationError(f"{where}: history_gaps must be > 0")
            if not (0.0 <= self.gap_jitter < 1.0):
                raise ConfigurationError(f"{where}: gap_jitter outside [0, 1)")
        elif kind == "reservoir":
            if self.cohort_size <= 0:
                raise ConfigurationError(f"{where}: reservoir cohort_size must be > 0")
            if not (0.0 <= self.depth_fraction <= 1.0):
                raise ConfigurationError(f"{where}: depth_fraction outside [0, 1]")

    def actor_digits(self) -> tuple[int, ...]:
        """Digit classes for the script's actor accounts."""
        if self.digits:
            return self.digits
        if self.kind == "sleeper":
            return (7,)  # ancient by default
        if self.kind == "reservoir":
            return (9, 10)
        return (10,)


@dataclass(frozen=True)
class TargetSpec:
    handle: str
    category: str
    uid: int | None = None
    digits: int = 7  # uid class when auto-assigned
    initial_followers: int | None = None  # override cohort-derived initial size

    def validate(self, where: str) -> None:
        if not self.handle:
            raise ConfigurationError(f"{where}: handle must be non-empty")
        if self.category not in CATEGORIES:
            raise ConfigurationError(
                f"{where}: category {self.category!r} not in {CATEGORIES}"
            )
        if self.uid is not None:
            validate_uid(self.uid)
        if not (MIN_DIGITS <= self.digits <= MAX_DIGITS):
            raise ConfigurationError(f"{where}: digits {self.digits} outside [2, 19]")


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration: float
    population: tuple[PopulationCohort, ...] = ()
    targets: tuple[TargetSpec, ...] = ()
    behaviors: tuple[BehaviorScript, ...] = ()
    ordering_noise: float = 0.0
    start_time: int = DEFAULT_START_TIME
    spike_width: float = 0.5
    spike_phase_jitter: float = 0.0
    freeze_pages: bool = True

    def validate(self) -> "Scenario":
        if self.duration <= 0:
            raise ConfigurationError("scenario duration must be > 0")
        if not (0.0 <= self.ordering_noise <= 1.0):
            raise ConfigurationError("ordering_noise outside [0, 1]")
        if not (0.0 < self.spike_width < 1.0):
            raise ConfigurationError("spike_width must be in (0, 1) seconds")
        if not (0.0 <= self.spike_phase_jitter <= 1.0):
            raise ConfigurationError("spike_phase_jitter outside [0, 1]")
        if self.start_time < 0:
            raise ConfigurationError("start_time must be >= 0")
        if not self.targets:
            raise ConfigurationError("scenario needs at least one target")
        handles = [t.handle for t in self.targets]
        if len(set(handles)) != len(handles):
            raise ConfigurationError("target handles must be unique")
        for i, cohort in enumerate(self.population):
            cohort.validate(f"population[{i}]")
        for i, target in enumerate(self.targets):
            target.validate(f"targets[{i}]")
        known = set(handles)
        for i, script in enumerate(self.behaviors):
            script.validate(f"behaviors[{i}]", self.duration)
            if script.target not in known:
                raise ConfigurationError(
                    f"behaviors[{i}]: target {script.target!r} not in scenario targets"
                )
        return self

    def end_time(self) -> float:
        return self.start_time + self.duration


def _coerce(cls, doc: dict[str, Any], where: str):
    names = {f.name for f in fields(cls)}
    unknown = set(doc) - names
    if unknown:
        raise ConfigurationError(f"{where}: unknown fields {sorted(unknown)}")
    kwargs = dict(doc)
    for f in fields(cls):
        if f.name in kwargs and isinstance(kwargs[f.name], list):
            kwargs[f.name] = tuple(kwargs[f.name])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario document must be an object")
    doc = dict(doc)
    for key, cls in (
        ("population", PopulationCohort),
        ("targets", TargetSpec),
        ("behaviors", BehaviorScript),
    ):
        items = doc.get(key, [])
        if not isinstance(items, list):
            raise ConfigurationError(f"scenario field {key!r} must be a list")
        doc[key] = tuple(
            _coerce(cls, item, f"{key}[{i}]") for i, item in enumerate(items)
        )
    return _coerce(Scenario, doc, "scenario").validate()


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    def plain(value):
        if isinstance(value, tuple):
            return [plain(v) for v in value]
        if hasattr(value, "__dataclass_fields__"):
            return {
                f.name: plain(getattr(value, f.name))
                for f in fields(value)
            }
        return value

    return plain(scenario)  # type: ignore[return-value]


def ancient_population(scenario: Scenario, threshold_digits: int = 8) -> int:
    """Accounts in the scenario whose digit class is at or below the threshold."""
    total = sum(
        c.size
        for c in scenario.population
        if c.creation_era_digits <= threshold_digits
    )
    for script in scenario.behaviors:
        if script.kind in ("sleeper", "circulation", "reservoir"):
            if all(d <= threshold_digits for d in script.actor_digits()):
                total += script.cohort_size
    return total


def load_scenario(
    path: str | Path,
    seed: int | None = None,
    duration: float | None = None,
) -> Scenario:
    """Parse and validate a scenario file, optionally overriding seed/duration."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if seed is not None:
        doc["seed"] = seed
    if duration is not None:
        doc["duration"] = duration
    try:
        return scenario_from_dict(doc)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
