"""Core identifiers, time, and the UID-digit creation-era mapping.

Numeric account ids encode a coarse creation date in their decimal digit
count: shorter ids belong to older accounts.  Two boundaries are well
established (8 digits ends December 2009; 19 digits covers July 2020
onward); everything between is a documented, configurable interpolation.
All types here are immutable values.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MIN_UID = 10                      # 2 digits
MAX_UID = 10**19 - 1              # 19 digits
MIN_DIGITS = 2
MAX_DIGITS = 19

# Epoch seconds for a UTC date at midnight.
_EPOCH = _dt.datetime(1970, 1, 1, tzinfo=_dt.timezone.utc)


class ValidationError(ValueError):
    """An input violated a domain invariant."""


class ConfigurationError(ValueError):
    """A configuration artifact (era table, scenario, plan) is unusable."""


def date_to_ts(date: _dt.date) -> int:
    """Midnight UTC of `date` as integer epoch seconds."""
    dt = _dt.datetime(date.year, date.month, date.day, tzinfo=_dt.timezone.utc)
    return int((dt - _EPOCH).total_seconds())


def ts_to_date(ts: float) -> _dt.date:
    return (_EPOCH + _dt.timedelta(seconds=ts)).date()


def validate_uid(uid: int) -> int:
    if not isinstance(uid, int) or isinstance(uid, bool):
        raise ValidationError(f"uid must be an integer, got {type(uid).__name__}")
    if uid < MIN_UID or uid > MAX_UID:
        raise ValidationError(f"uid {uid} outside [{MIN_UID}, {MAX_UID}]")
    return uid


def digit_count(uid: int) -> int:
    """Decimal digit length of a valid account id, in [2, 19]."""
    validate_uid(uid)
    n = 1
    while uid >= 10:
        uid //= 10
        n += 1
    return n


# Powers of ten separating digit classes; uint64 comfortably holds 10^19.
_DIGIT_POWERS = np.array([10**k for k in range(MIN_DIGITS, MAX_DIGITS + 1)], dtype=np.uint64)


def digit_counts(uids: np.ndarray) -> np.ndarray:
    """Vectorized digit_count over an array of valid uids."""
    arr = np.asarray(uids, dtype=np.uint64)
    if len(arr) and (arr.min() < MIN_UID or arr.max() > MAX_UID):
        raise ValidationError("uid array contains out-of-range values")
    return np.searchsorted(_DIGIT_POWERS, arr, side="right") + MIN_DIGITS


def is_ancient(uid: int, threshold_digits: int = 8) -> bool:
    """True iff the id's digit count is at or below the threshold.

    The default threshold of 8 digits marks accounts created on or before
    December 2009.
    """
    if not (MIN_DIGITS <= threshold_digits <= MAX_DIGITS):
        raise ValidationError(f"threshold_digits {threshold_digits} outside [2, 19]")
    return digit_count(uid) <= threshold_digits


@dataclass(frozen=True)
class CreationEra:
    """Date interval covered by one digit count."""

    digits: int
    era_start: _dt.date
    era_end: _dt.date

    def __post_init__(self):
        if not (MIN_DIGITS <= self.digits <= MAX_DIGITS):
            raise ValidationError(f"era digits {self.digits} outside [2, 19]")
        if self.era_end < self.era_start:
            raise ValidationError(f"era for {self.digits} digits ends before it starts")

    def contains(self, date: _dt.date) -> bool:
        return self.era_start <= date <= self.era_end


# Default digit -> era table.  Only two boundaries are externally anchored:
# 8 digits ends 2009-12-31 and 19 digits covers July 2020.  The remaining
# boundaries are a monotone interpolation and can be replaced via
# load_era_table() without code changes.
_DEFAULT_TABLE_ROWS = [
    (2, "2006-03-21", "2006-06-30"),
    (3, "2006-07-01", "2006-09-30"),
    (4, "2006-10-01", "2006-12-31"),
    (5, "2007-01-01", "2007-06-30"),
    (6, "2007-07-01", "2008-03-31"),
    (7, "2008-04-01", "2008-12-31"),
    (8, "2009-01-01", "2009-12-31"),
    (9, "2010-01-01", "2010-10-31"),
    (10, "2010-11-01", "2011-12-31"),
    (11, "2012-01-01", "2013-03-31"),
    (12, "2013-04-01", "2014-06-30"),
    (13, "2014-07-01", "2015-09-30"),
    (14, "2015-10-01", "2016-12-31"),
    (15, "2017-01-01", "2017-12-31"),
    (16, "2018-01-01", "2018-12-31"),
    (17, "2019-01-01", "2019-09-30"),
    (18, "2019-10-01", "2020-06-30"),
    (19, "2020-07-01", "2021-12-31"),
]


def _validate_table(eras: list[CreationEra]) -> list[CreationEra]:
    by_digits = {e.digits: e for e in eras}
    missing = [d for d in range(MIN_DIGITS, MAX_DIGITS + 1) if d not in by_digits]
    if missing:
        raise ConfigurationError(f"era table missing digit counts {missing}")
    if len(by_digits) != len(eras):
        raise ConfigurationError("era table has duplicate digit counts")
    ordered = [by_digits[d] for d in range(MIN_DIGITS, MAX_DIGITS + 1)]
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.era_start <= prev.era_end:
            raise ConfigurationError(
                f"eras for {prev.digits} and {cur.digits} digits overlap or are non-monotone"
            )
    return ordered


def default_era_table() -> list[CreationEra]:
    return _validate_table(
        [
            CreationEra(d, _dt.date.fromisoformat(a), _dt.date.fromisoformat(b))
            for d, a, b in _DEFAULT_TABLE_ROWS
        ]
    )


def load_era_table(path: str | Path) -> list[CreationEra]:
    """Load an era table from a newline-delimited file.

    One record per digit count: `digits,era_start,era_end` with ISO-8601
    dates.  Lines starting with '#' and a header line are ignored.  The
    table must cover every digit count in [2, 19] with disjoint, monotone
    intervals.
    """
    eras = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.lower().startswith("digits"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ConfigurationError(f"{path}:{lineno}: expected 'digits,era_start,era_end'")
        try:
            eras.append(
                CreationEra(
                    int(parts[0]),
                    _dt.date.fromisoformat(parts[1]),
                    _dt.date.fromisoformat(parts[2]),
                )
            )
        except (ValueError, ValidationError) as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from exc
    return _validate_table(eras)


def era_of(uid: int, table: list[CreationEra] | None = None) -> CreationEra:
    """The unique era for the id's digit count."""
    table = _validate_table(table) if table is not None else default_era_table()
    return table[digit_count(uid) - MIN_DIGITS]


def uid_range_for_digits(digits: int) -> tuple[int, int]:
    """Half-open [lo, hi) uid range for a digit class."""
    if not (MIN_DIGITS <= digits <= MAX_DIGITS):
        raise ValidationError(f"digit class {digits} outside [2, 19]")
    return 10 ** (digits - 1), 10**digits


CATEGORIES = ("candidate", "individual", "organization")


@dataclass(frozen=True)
class WatchedUser:
    """A high-profile account under observation."""

    uid: int
    handle: str
    category: str

    def __post_init__(self):
        validate_uid(self.uid)
        if not self.handle:
            raise ValidationError("watched user handle must be non-empty")
        if self.category not in CATEGORIES:
            raise ValidationError(
                f"category {self.category!r} not in {CATEGORIES}"
            )
