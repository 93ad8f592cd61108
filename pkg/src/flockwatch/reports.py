"""CSV reports and static figure emitters for detector output.

Tables carry the documented column headers byte for byte.  Figures are
SVG with a pinned hash salt and no date metadata so identical inputs
produce identical bytes.
"""

from __future__ import annotations

import csv
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "flockwatch"

TABLE1_COLUMNS = (
    "Username",
    "Followers (millions)",
    "Spikes/Day",
    "Avg. Spike Effect",
    "Net Spike Effect",
    "Sawteeth/Day",
    "Avg. Sawtooth Effect",
    "Net Sawtooth Effect",
)

TABLE2_COLUMNS = (
    "Username",
    "Circulating Followers",
    "Circulations",
    "Circulations/Day",
)


def fmt_num(value: Any) -> str:
    """Deterministic scalar formatting for report cells."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        value = float(value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value == int(value) and abs(value) < 1e15:
            return str(int(value))
        return f"{value:.4f}"
    return str(value)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: list[Sequence[Any]],
    also_ndrec: bool = False,
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_num(v) for v in row])
    if also_ndrec:
        import json

        with open(path.with_suffix(".ndrec"), "w", encoding="utf-8") as fh:
            for row in rows:
                doc = {k: fmt_num(v) for k, v in zip(header, row)}
                fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_counts(series_by_handle: dict[str, tuple[list[int], list[int]]], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    for handle, (times, counts) in sorted(series_by_handle.items())[:6]:
        if not times:
            continue
        t0 = times[0]
        ax.plot([t - t0 for t in times], counts, lw=0.8, label=handle)
    ax.set_xlabel("seconds since first sample")
    ax.set_ylabel("followers")
    ax.set_title("follower counts")
    if series_by_handle:
        ax.legend(fontsize=7)
    _save(fig, path)


def plot_circulation_series(
    buckets_by_handle: dict[str, list] , path: Path
) -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    for handle, buckets in sorted(buckets_by_handle.items())[:6]:
        xs = [b.start for b in buckets if b.observed]
        ys = [b.count for b in buckets if b.observed]
        ax.plot(xs, ys, marker="o", ms=2, lw=0.8, label=handle)
    ax.set_xlabel("bucket start (epoch s)")
    ax.set_ylabel("circulations")
    ax.set_title("circulation activity per bucket")
    if buckets_by_handle:
        ax.legend(fontsize=7)
    _save(fig, path)


def plot_circulation_vs_effect(
    points: list[tuple[str, float, float]], critical: float, path: Path
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    if points:
        ax.scatter([p[1] for p in points], [p[2] for p in points], s=12)
    ax.axvline(critical, color="red", lw=0.8, ls="--")
    ax.set_xscale("symlog")
    ax.set_xlabel("total absolute waveform effect")
    ax.set_ylabel("observed circulations")
    ax.set_title("circulations vs waveform effect")
    _save(fig, path)


def plot_stratigraphy(batches: list, path: Path, handle: str = "") -> None:
    fig, ax = plt.subplots(figsize=(10, 4))
    classes = sorted({d for b in batches for d in b.histogram})
    xs = [b.index for b in batches]
    bottom = [0.0] * len(batches)
    for d in classes:
        ys = [b.histogram.get(d, 0.0) for b in batches]
        ax.bar(xs, ys, bottom=bottom, width=1.0, label=f"{d} digits")
        bottom = [a + b for a, b in zip(bottom, ys)]
    ax.set_xlabel("batch (5,000 followers, most recent first)")
    ax.set_ylabel("proportion")
    ax.set_title(f"follower stratigraphy {handle}".strip())
    ax.legend(fontsize=6, ncol=3)
    _save(fig, path)


def plot_wakeups(
    gap_hist: list[tuple[int, int]],
    gap_points: list[tuple[int, int]],
    fit: Any,
    path: Path,
) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    if gap_hist:
        ax1.bar([b for b, _ in gap_hist], [c for _, c in gap_hist],
                width=86400, align="edge")
    ax1.set_xlabel("gap end (epoch s)")
    ax1.set_ylabel("gaps")
    ax1.set_title("gap-end histogram")
    if gap_points:
        ax2.scatter([e for e, _ in gap_points], [l for _, l in gap_points], s=4)
        if fit is not None and not fit.degenerate:
            xs = sorted(e for e, _ in gap_points)
            ax2.plot(xs, [fit.slope * x + fit.intercept for x in xs], "r-", lw=0.8)
    ax2.set_xlabel("gap end (epoch s)")
    ax2.set_ylabel("gap length (s)")
    ax2.set_title("gap length vs end date")
    _save(fig, path)


def table1_rows(
    entries: list[dict[str, Any]],
) -> list[Sequence[Any]]:
    """entries: handle, followers, stats (WaveformStats)."""
    rows = []
    for e in entries:
        stats = e["stats"]
        rows.append(
            (
                e["handle"],
                f"{e['followers'] / 1e6:.2f}",
                stats.spikes_per_day,
                stats.avg_spike_effect,
                stats.net_spike_effect,
                stats.sawteeth_per_day,
                stats.avg_sawtooth_effect,
                stats.net_sawtooth_effect,
            )
        )
    return rows


def table2_rows(entries: list[dict[str, Any]]) -> list[Sequence[Any]]:
    """entries: handle, circulating_followers, circulations, per_day."""
    return [
        (
            e["handle"],
            e["circulating_followers"],
            e["circulations"],
            e["per_day"],
        )
        for e in entries
    ]
