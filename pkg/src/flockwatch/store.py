"""Append-only observation store over newline-delimited JSON records.

One stream per file, named `<run_dir>/<stream>[.<target>].ndrec`.  Records
are immutable once written; a torn trailing line (crash artifact) is
truncated with a warning the next time the file is opened.  Replaying a
stream always yields records in append order.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

logger = logging.getLogger(__name__)

STREAMS = (
    "counts",
    "follower_sample",
    "tunnel_page",
    "timeline",
    "hydration",
    "ground_truth",
    "detection",
)

# Required payload fields (beyond t/stream/target) per stream.
_SCHEMAS: dict[str, tuple[str, ...]] = {
    "counts": ("count",),
    "follower_sample": ("cycle", "pages"),
    "tunnel_page": ("page_index", "ids", "cursor_offset"),
    "timeline": ("account", "tweets"),
    "hydration": ("records", "unresolved"),
    "ground_truth": ("kind", "actor", "delta"),
    "detection": ("detector", "payload"),
}


class StoreError(ValueError):
    """Schema violation or unknown stream."""


@dataclass(frozen=True)
class Record:
    t: int
    stream: str
    target: int | None
    payload: dict[str, Any]


def validate_record(record: Record) -> None:
    if record.stream not in STREAMS:
        raise StoreError(f"unknown stream {record.stream!r}")
    if not isinstance(record.t, int) or isinstance(record.t, bool) or record.t < 0:
        raise StoreError(f"record t must be a non-negative integer, got {record.t!r}")
    if record.target is not None and not isinstance(record.target, int):
        raise StoreError("record target must be an integer account id or None")
    if not isinstance(record.payload, dict):
        raise StoreError("record payload must be a dict")
    missing = [f for f in _SCHEMAS[record.stream] if f not in record.payload]
    if missing:
        raise StoreError(f"stream {record.stream!r} payload missing fields {missing}")


def _encode(record: Record) -> bytes:
    doc = {"t": record.t, "stream": record.stream, "target": record.target}
    doc.update(record.payload)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _decode(line: bytes) -> Record:
    doc = json.loads(line)
    t = doc.pop("t")
    stream = doc.pop("stream")
    target = doc.pop("target")
    return Record(t=t, stream=stream, target=target, payload=doc)


def stream_filename(stream: str, target: int | None = None) -> str:
    return f"{stream}.{target}.ndrec" if target is not None else f"{stream}.ndrec"


class StreamWriter:
    """Single writer for one stream file.  Appends are durable on return."""

    def __init__(self, path: Path, sync: bool = False):
        self.path = path
        self._sync = sync
        self._offset, self._last_t = _truncate_torn_tail(path)
        self._fh = open(path, "ab")

    def append(self, record: Record) -> int:
        validate_record(record)
        line = _encode(record) + b"\n"
        if self._offset > 0 and record.t < self._last_t:
            raise StoreError(
                f"append order violated in {self.path.name}: t={record.t} < {self._last_t}"
            )
        self._fh.write(line)
        self._fh.flush()
        if self._sync:
            os.fsync(self._fh.fileno())
        self._last_t = record.t
        offset = self._offset
        self._offset += 1
        return offset

    def close(self) -> None:
        self._fh.close()


def _truncate_torn_tail(path: Path) -> tuple[int, int]:
    """Drop a trailing partial line; return (complete records, last record t)."""
    if not path.exists():
        return 0, 0
    data = path.read_bytes()
    if not data:
        return 0, 0
    if not data.endswith(b"\n"):
        keep = data.rfind(b"\n") + 1
        logger.warning(
            "truncating torn tail of %s (%d bytes dropped)", path, len(data) - keep
        )
        with open(path, "r+b") as fh:
            fh.truncate(keep)
        data = data[:keep]
    count = data.count(b"\n")
    last_t = 0
    if count:
        tail = data[: -1].rfind(b"\n")
        last_t = json.loads(data[tail + 1 :])["t"]
    return count, last_t


@dataclass
class Store:
    """A run directory of append-only streams."""

    run_dir: Path
    sync: bool = False
    _writers: dict[str, StreamWriter] = field(default_factory=dict)

    def __post_init__(self):
        self.run_dir = Path(self.run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)

    def _writer(self, stream: str, target: int | None) -> StreamWriter:
        name = stream_filename(stream, target)
        if name not in self._writers:
            self._writers[name] = StreamWriter(self.run_dir / name, sync=self.sync)
        return self._writers[name]

    def append(self, record: Record) -> int:
        validate_record(record)
        return self._writer(record.stream, record.target).append(record)

    def scan(
        self,
        stream: str,
        target: int | None = None,
        t_range: tuple[float, float] | None = None,
    ) -> Iterator[Record]:
        """Records in append order.  `target=None` merges all per-target files.

        `t_range` is an inclusive (lo, hi) filter on the record timestamp.
        """
        if stream not in STREAMS:
            raise StoreError(f"unknown stream {stream!r}")
        if target is not None:
            paths = [self.run_dir / stream_filename(stream, target)]
        else:
            paths = sorted(self.run_dir.glob(f"{stream}.ndrec")) + sorted(
                self.run_dir.glob(f"{stream}.*.ndrec")
            )
        for path in paths:
            if not path.exists():
                continue
            _truncate_torn_tail(path)
            with open(path, "rb") as fh:
                for line in fh:
                    rec = _decode(line)
                    if t_range is not None and not (t_range[0] <= rec.t <= t_range[1]):
                        continue
                    yield rec

    def targets_of(self, stream: str) -> list[int]:
        """Target ids that have a per-target file for this stream."""
        out = []
        for path in self.run_dir.glob(f"{stream}.*.ndrec"):
            stem = path.name[len(stream) + 1 : -len(".ndrec")]
            try:
                out.append(int(stem))
            except ValueError:
                continue
        return sorted(out)

    def close(self) -> None:
        for writer in self._writers.values():
            writer.close()
        self._writers.clear()
