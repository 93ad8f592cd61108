"""Command-line orchestration: simulate, observe, detect, verify.

Exit codes: 0 success, 1 invariant failure, 2 usage or configuration
error.  Every output byte is a function of (scenario, seed, plan,
budget, params); nothing is stamped with wall-clock time.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .domain import ConfigurationError, ValidationError, digit_counts
from . import reports
from .detectors import (
    CountSeries,
    DetectorParams,
    FollowerSample,
    InsufficientData,
    SAWTOOTH,
    SPIKE,
    ancient_registry_stats,
    circulation_series,
    correlate_circulation_vs_effect,
    detect_circulations,
    detect_gaps,
    detect_waveforms,
    find_inversions,
    gap_end_correlation,
    load_params,
    outside_dominant_share,
    stratify,
    summarize_waveforms,
)
from .detectors.waveforms import WaveformEvent
from .sampler import ObservationRun, load_budget, load_plan
from .simulator import SimConnector, build_world, load_scenario, save_scenario
from .simulator.scenario import ancient_population
from .store import Record, Store

SCENARIO_FILE = "scenario.resolved.json"
GROUND_TRUTH_FILE = "ground_truth.ndrec"


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


# -- simulate --------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario, seed=args.seed, duration=args.duration)
    except ConfigurationError as exc:
        return _fail(str(exc), 2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    world = build_world(scenario)
    world.advance(world.end)
    save_scenario(scenario, out / SCENARIO_FILE)
    with open(out / GROUND_TRUTH_FILE, "w", encoding="utf-8") as fh:
        n = world.ground_truth.export(fh)
    manifest = {
        "events": n,
        "targets": {h: world.uid_for_handle(h) for h in sorted(
            t.handle for t in scenario.targets)},
        "duration": scenario.duration,
        "seed": scenario.seed,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"simulated {scenario.duration:.0f}s, {n} ground-truth events -> {out}")
    return 0


# -- observe ---------------------------------------------------------------


def _load_run_world(run_dir: Path):
    scenario = load_scenario(run_dir / SCENARIO_FILE)
    return scenario, build_world(scenario)


def cmd_observe(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    try:
        scenario, world = _load_run_world(run_dir)
        plan = load_plan(args.plan)
        budget = load_budget(args.budget)
    except ConfigurationError as exc:
        return _fail(str(exc), 2)
    missing = [h for h in plan.watchlist if h not in {t.handle for t in scenario.targets}]
    if missing:
        return _fail(f"plan watches unknown targets: {missing}", 2)
    store = Store(run_dir)
    connector = SimConnector(world)
    handles = {t.handle: world.uid_for_handle(t.handle) for t in scenario.targets}
    run = ObservationRun(connector, plan, budget, handles, world.start, store)
    run.poll(scenario.duration)
    for handle in plan.tunnel_targets:
        ids = run.tunnel_followers(handle)
        if plan.hydrate_tunnels and ids:
            run.hydrate_ids(ids)
    if plan.timeline_polling and run.registry:
        run.poll_timelines()
    run.request_log.assert_compliance(budget)
    store.close()
    (run_dir / "plan.resolved.json").write_text(
        json.dumps(
            {k: list(v) if isinstance(v, tuple) else v
             for k, v in plan.__dict__.items()},
            indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (run_dir / "budget.resolved.json").write_text(
        json.dumps(budget.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"observed {scenario.duration:.0f}s over {len(plan.watchlist)} targets -> {run_dir}")
    return 0


# -- detect ----------------------------------------------------------------


def _series_from_store(store: Store, target: int) -> CountSeries:
    times, counts, gaps = [], [], []
    for rec in store.scan("counts", target=target):
        if rec.payload.get("count") is None:
            gaps.append((rec.t, rec.payload.get("gap", "unknown")))
        else:
            times.append(rec.t)
            counts.append(rec.payload["count"])
    return CountSeries(
        target=target, times=tuple(times), counts=tuple(counts), gaps=tuple(gaps)
    )


def _samples_from_store(store: Store, target: int) -> list[FollowerSample]:
    out = []
    for rec in store.scan("follower_sample", target=target):
        ids: list[int] = []
        for page in rec.payload["pages"]:
            ids.extend(page["ids"])
        out.append(
            FollowerSample(
                target=target,
                t=rec.t,
                cycle=rec.payload["cycle"],
                ids=tuple(ids),
                page_times=tuple(p["t"] for p in rec.payload["pages"]),
                discarded=bool(rec.payload.get("discarded", False)),
            )
        )
    return [s for s in out if not s.discarded]


def _tunnel_ids_from_store(store: Store, target: int) -> list[int]:
    pages = list(store.scan("tunnel_page", target=target))
    if not pages:
        return []
    last_start = max(i for i, r in enumerate(pages) if r.payload["page_index"] == 0)
    ids: list[int] = []
    for rec in pages[last_start:]:
        ids.extend(rec.payload["ids"])
    return ids


def _observed_span(series: CountSeries, params: DetectorParams) -> tuple[float, float]:
    """(span, unobserved) seconds for per-day denominators."""
    if len(series) < 2:
        return float(len(series)), 0.0
    times = np.asarray(series.times, dtype=np.float64)
    dt = np.diff(times)
    nominal = float(np.median(dt))
    span = float(times[-1] - times[0]) + nominal
    unobserved = float(dt[dt > params.recovery_horizon * nominal].sum())
    return span, unobserved


def cmd_detect(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    if not (run_dir / SCENARIO_FILE).exists():
        return _fail(f"no run artifacts at {run_dir}", 2)
    try:
        params = load_params(args.params) if args.params else DetectorParams()
        scenario = load_scenario(run_dir / SCENARIO_FILE)
    except ConfigurationError as exc:
        return _fail(str(exc), 2)
    store = Store(run_dir)
    report_dir = run_dir / "reports"
    figure_dir = run_dir / "figures"
    handle_of = {}
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        handle_of = {uid: h for h, uid in manifest.get("targets", {}).items()}

    detections: list[Record] = []
    analysis_t = 0

    # E1: waveforms per counts stream.
    table1_entries = []
    waveform_events: dict[int, list[WaveformEvent]] = {}
    counts_targets = store.targets_of("counts")
    series_plot_data = {}
    for uid in counts_targets:
        series = _series_from_store(store, uid)
        if len(series):
            analysis_t = max(analysis_t, series.times[-1])
        try:
            events = detect_waveforms(series, params)
        except InsufficientData as exc:
            _warn(f"waveforms unavailable for {uid}: {exc}")
            continue
        span, unobserved = _observed_span(series, params)
        stats = summarize_waveforms(events, span, unobserved)
        waveform_events[uid] = events
        handle = handle_of.get(uid, str(uid))
        table1_entries.append(
            {
                "handle": handle,
                "followers": series.counts[-1] if len(series) else 0,
                "stats": stats,
            }
        )
        series_plot_data[handle] = (list(series.times), list(series.counts))
        for ev in events:
            detections.append(
                Record(
                    t=0,
                    stream="detection",
                    target=uid,
                    payload={"detector": "waveform", "payload": ev.to_doc()},
                )
            )
    if not counts_targets:
        _warn("counts stream missing; Table 1 section unavailable")

    # E2: circulations per follower_sample stream.
    table2_entries = []
    circ_totals: dict[int, int] = {}
    circ_buckets = {}
    sample_targets = store.targets_of("follower_sample")
    registry: set[int] = set()
    for uid in sample_targets:
        samples = _samples_from_store(store, uid)
        if samples:
            analysis_t = max(analysis_t, samples[-1].t)
            for s in samples:
                if s.ids:
                    arr = np.asarray(s.ids, dtype=np.uint64)
                    anc = arr[digit_counts(arr) <= 8]
                    registry.update(int(x) for x in anc)
        records = detect_circulations(samples, noise_margin=params.noise_margin)
        total = sum(r.circulations for r in records)
        circ_totals[uid] = total
        sample_times = [s.t for s in samples]
        buckets = circulation_series(records, sample_times, params.circulation_bucket)
        handle = handle_of.get(uid, str(uid))
        circ_buckets[handle] = buckets
        span_days = (
            (sample_times[-1] - sample_times[0]) / 86400.0 if len(sample_times) > 1 else 1.0
        )
        table2_entries.append(
            {
                "handle": handle,
                "circulating_followers": len(records),
                "circulations": total,
                "per_day": total / span_days if span_days > 0 else 0.0,
            }
        )
        detections.append(
            Record(
                t=0,
                stream="detection",
                target=uid,
                payload={
                    "detector": "circulation",
                    "payload": {
                        "circulating_followers": len(records),
                        "circulations": total,
                        "records": [
                            {
                                "follower": r.follower,
                                "episodes": [list(e) for e in r.episodes],
                            }
                            for r in records[:10000]
                        ],
                    },
                },
            )
        )
    if not sample_targets:
        _warn("follower_sample stream missing; Table 2 section unavailable")

    # E3: gaps over polled timelines.
    gap_list = []
    for rec in store.scan("timeline"):
        analysis_t = max(analysis_t, rec.t)
        account = rec.payload["account"]
        tweets = rec.payload["tweets"]
        try:
            gaps = detect_gaps(tweets, params.min_gap_seconds, account=account)
        except ValidationError as exc:
            _warn(f"timeline for {account} unusable: {exc}")
            continue
        gap_list.extend(gaps)
    gap_fit = None
    if len(gap_list) >= 3:
        gap_fit = gap_end_correlation(gap_list)
    elif gap_list:
        _warn("fewer than 3 gaps; gap-end fit unavailable")
    if gap_list:
        detections.append(
            Record(
                t=0,
                stream="detection",
                target=None,
                payload={
                    "detector": "gaps",
                    "payload": {
                        "count": len(gap_list),
                        "fit": None
                        if gap_fit is None
                        else {
                            "slope": gap_fit.slope,
                            "intercept": gap_fit.intercept,
                            "r": gap_fit.r,
                            "n": gap_fit.n,
                            "degenerate": gap_fit.degenerate,
                        },
                    },
                },
            )
        )

    # E4: stratigraphy over tunneled lists.
    strat_by_handle = {}
    inversion_payloads = []
    for uid in store.targets_of("tunnel_page"):
        ids = _tunnel_ids_from_store(store, uid)
        if not ids:
            continue
        batches = stratify(ids, params.stratigraphy_batch)
        regions = find_inversions(batches, params.inversion_min_run)
        handle = handle_of.get(uid, str(uid))
        strat_by_handle[handle] = batches
        inversion_payloads.append(
            {
                "target": uid,
                "handle": handle,
                "batches": len(batches),
                "outside_dominant_share": outside_dominant_share(batches, regions),
                "regions": [
                    {
                        "start": r.start,
                        "end": r.end,
                        "dominant_classes": list(r.dominant_classes),
                    }
                    for r in regions
                ],
            }
        )
        detections.append(
            Record(
                t=0,
                stream="detection",
                target=uid,
                payload={"detector": "stratigraphy", "payload": inversion_payloads[-1]},
            )
        )

    # Fig. 3 analog: circulation totals against detected waveform effect.
    fig3_points = []
    for uid, events in waveform_events.items():
        if uid not in circ_totals:
            continue
        effect = float(
            sum(abs(e.effect) for e in events if e.kind in (SPIKE, SAWTOOTH))
        )
        fig3_points.append((handle_of.get(uid, str(uid)), effect, float(circ_totals[uid])))
    split = None
    if fig3_points:
        split = correlate_circulation_vs_effect(
            [(e, c) for _, e, c in fig3_points], params.critical_effect
        )
        detections.append(
            Record(
                t=0,
                stream="detection",
                target=None,
                payload={
                    "detector": "circulation_vs_effect",
                    "payload": {
                        "critical": split.critical,
                        "low_r": split.low_r,
                        "high_r": split.high_r,
                        "n_low": split.n_low,
                        "n_high": split.n_high,
                    },
                },
            )
        )

    # Registry stats against the scenario's ancient population.
    population = ancient_population(scenario)
    seen, fraction = ancient_registry_stats(registry, population)
    detections.append(
        Record(
            t=0,
            stream="detection",
            target=None,
            payload={
                "detector": "ancient_registry",
                "payload": {
                    "unique_ancient": seen,
                    "ancient_population": population,
                    "fraction": fraction,
                },
            },
        )
    )

    # Persist detections (analysis time is data-derived, never wall clock).
    # Re-detection replaces the previous detection stream so replays are
    # byte-identical rather than accumulating.
    for old in run_dir.glob("detection*.ndrec"):
        old.unlink()
    for rec in detections:
        store.append(
            Record(
                t=int(analysis_t),
                stream="detection",
                target=rec.target,
                payload=rec.payload,
            )
        )
    store.close()

    # Reports and figures.
    def _emit(path, header, rows):
        reports.write_csv(path, header, rows, also_ndrec=args.format == "ndrec")

    _emit(
        report_dir / "table1_waveforms.csv",
        reports.TABLE1_COLUMNS,
        reports.table1_rows(sorted(table1_entries, key=lambda e: e["handle"])),
    )
    _emit(
        report_dir / "table2_circulations.csv",
        reports.TABLE2_COLUMNS,
        reports.table2_rows(sorted(table2_entries, key=lambda e: e["handle"])),
    )
    fig2_rows = []
    for handle, buckets in sorted(circ_buckets.items()):
        for b in buckets:
            fig2_rows.append((handle, b.start, b.count, b.observed))
    _emit(
        report_dir / "fig2_circulation_series.csv",
        ("Username", "Bucket Start", "Circulations", "Observed"),
        fig2_rows,
    )
    _emit(
        report_dir / "fig3_circulation_vs_effect.csv",
        ("Username", "Total Absolute Effect", "Circulations"),
        [(h, e, c) for h, e, c in sorted(fig3_points)],
    )
    if split is not None:
        _emit(
            report_dir / "fig3_split_correlation.csv",
            ("Side", "N", "Pearson r"),
            [
                ("low", split.n_low, "undefined" if split.low_r is None else split.low_r),
                ("high", split.n_high, "undefined" if split.high_r is None else split.high_r),
            ],
        )
    fig4_rows = []
    for handle, batches in sorted(strat_by_handle.items()):
        for b in batches:
            for d in sorted(b.histogram):
                fig4_rows.append((handle, b.index, d, b.histogram[d]))
    _emit(
        report_dir / "fig4_stratigraphy.csv",
        ("Username", "Batch", "Digits", "Proportion"),
        fig4_rows,
    )
    hist: dict[int, int] = {}
    for g in gap_list:
        b = g.gap_end - g.gap_end % 86400
        hist[b] = hist.get(b, 0) + 1
    gap_hist = sorted(hist.items())
    _emit(
        report_dir / "fig5_gap_histogram.csv",
        ("Bucket Start", "Gap Count"),
        gap_hist,
    )
    _emit(
        report_dir / "fig5_gap_scatter.csv",
        ("Account", "Gap End", "Gap Length"),
        [(g.account, g.gap_end, g.length) for g in gap_list],
    )
    if gap_fit is not None:
        _emit(
            report_dir / "fig5_fit.csv",
            ("Slope", "Intercept", "Pearson r", "N", "Degenerate"),
            [(gap_fit.slope, gap_fit.intercept, gap_fit.r, gap_fit.n, gap_fit.degenerate)],
        )

    reports.plot_counts(series_plot_data, figure_dir / "fig1_counts.svg")
    reports.plot_circulation_series(circ_buckets, figure_dir / "fig2_circulations.svg")
    reports.plot_circulation_vs_effect(
        fig3_points, params.critical_effect, figure_dir / "fig3_circulation_vs_effect.svg"
    )
    for handle, batches in sorted(strat_by_handle.items()):
        reports.plot_stratigraphy(
            batches, figure_dir / f"fig4_stratigraphy_{handle}.svg", handle
        )
    reports.plot_wakeups(
        gap_hist,
        [(g.gap_end, g.length) for g in gap_list],
        gap_fit,
        figure_dir / "fig5_wakeups.svg",
    )
    print(f"detection complete -> {report_dir}")
    return 0


# -- verify ----------------------------------------------------------------


def _match_events(
    detected: list[tuple[float, float]],
    truth: list[tuple[float, float]],
    time_tol: float,
    effect_tol: float,
) -> int:
    """Greedy one-to-one matching by time; returns matched count."""
    used = [False] * len(truth)
    matched = 0
    for t, effect in detected:
        best, best_dt = None, None
        for i, (tt, te) in enumerate(truth):
            if used[i]:
                continue
            dt = abs(t - tt)
            if dt <= time_tol and abs(effect - te) <= max(effect_tol, 0.1 * abs(te)):
                if best_dt is None or dt < best_dt:
                    best, best_dt = i, dt
        if best is not None:
            used[best] = True
            matched += 1
    return matched


def cmd_verify(args: argparse.Namespace) -> int:
    run_dir = Path(args.run)
    try:
        scenario, world = _load_run_world(run_dir)
    except ConfigurationError as exc:
        return _fail(str(exc), 2)
    world.advance(world.end + 10 * 86400)
    store = Store(run_dir)
    gt = world.ground_truth
    failures: list[str] = []
    report: dict[str, Any] = {}

    # Ground-truth file must byte-match a fresh deterministic export.
    gt_path = run_dir / GROUND_TRUTH_FILE
    if gt_path.exists():
        import io

        buf = io.StringIO()
        gt.export(buf)
        if buf.getvalue() != gt_path.read_text(encoding="utf-8"):
            failures.append("ground_truth.ndrec does not match deterministic replay")
    else:
        return _fail(f"missing {gt_path}", 2)

    # Conservation: every stored count must equal the replayed truth.
    mismatches = 0
    checked = 0
    for uid in store.targets_of("counts"):
        for rec in store.scan("counts", target=uid):
            if rec.payload.get("count") is None:
                continue
            checked += 1
            t = rec.payload.get("t_exact", rec.t)
            if world.ledger(uid).count_at(t) != rec.payload["count"]:
                mismatches += 1
    if mismatches:
        failures.append(f"{mismatches}/{checked} stored counts contradict ground truth")
    report["counts_checked"] = checked

    # Budget compliance from the stored request timestamps.
    budget_path = run_dir / "budget.resolved.json"
    if budget_path.exists():
        from .sampler.budget import RateBudget, RequestLog

        budget = RateBudget(**json.loads(budget_path.read_text(encoding="utf-8")))
        log = RequestLog()
        for uid in store.targets_of("counts"):
            for rec in store.scan("counts", target=uid):
                log.record(rec.t, "count")
        for uid in store.targets_of("follower_sample"):
            for rec in store.scan("follower_sample", target=uid):
                for page in rec.payload["pages"]:
                    log.record(page["t"], "page")
        for uid in store.targets_of("tunnel_page"):
            for rec in store.scan("tunnel_page", target=uid):
                log.record(rec.t, "page")
        for rec in store.scan("timeline"):
            log.record(rec.t, "timeline")
        for rec in store.scan("hydration"):
            log.record(rec.t, "hydration")
        try:
            log.assert_compliance(budget)
            report["budget_compliant"] = True
        except AssertionError as exc:
            failures.append(str(exc))
            report["budget_compliant"] = False

    # Waveform precision/recall against scripted events.
    wf: dict[int, dict[str, list[tuple[float, float]]]] = {}
    for rec in store.scan("detection"):
        if rec.payload.get("detector") != "waveform":
            continue
        doc = rec.payload["payload"]
        kind = doc["kind"]
        if kind not in (SPIKE, SAWTOOTH):
            continue
        wf.setdefault(rec.target, {}).setdefault(kind, []).append(
            (doc["t_start"], doc["effect"])
        )
    wf_report = {}
    for uid in store.targets_of("counts"):
        truth_spikes = [(t, float(m)) for t, m in gt.spike_events(uid)]
        truth_saws = [(t, float(d)) for t, d, _ in gt.sawtooth_events(uid)]
        det = wf.get(uid, {})
        for kind, truth in ((SPIKE, truth_spikes), (SAWTOOTH, truth_saws)):
            detected = det.get(kind, [])
            matched = _match_events(detected, truth, time_tol=5.0, effect_tol=2.0)
            precision = matched / len(detected) if detected else 1.0
            recall = matched / len(truth) if truth else 1.0
            wf_report[f"{uid}:{kind}"] = {
                "detected": len(detected),
                "truth": len(truth),
                "matched": matched,
                "precision": precision,
                "recall": recall,
            }
    report["waveforms"] = wf_report

    # Circulation soundness: without ordering noise, every detected
    # circulation must be backed by scripted re-follows.
    circ_report = {}
    for rec in store.scan("detection"):
        if rec.payload.get("detector") != "circulation":
            continue
        uid = rec.target
        truth = gt.circulation_refollows(uid)
        truth_total = sum(truth.values())
        detected_total = rec.payload["payload"]["circulations"]
        false_events = 0
        for r in rec.payload["payload"]["records"]:
            true_n = truth.get(r["follower"], 0)
            det_n = len(r["episodes"]) - 1
            if det_n > true_n:
                false_events += det_n - true_n
        if scenario.ordering_noise == 0 and false_events:
            failures.append(
                f"{false_events} detected circulations on {uid} have no "
                f"ground-truth re-follow (noise-free run)"
            )
        circ_report[str(uid)] = {
            "detected": detected_total,
            "truth": truth_total,
            "recall": detected_total / truth_total if truth_total else 1.0,
            "false_events": false_events,
        }
    report["circulations"] = circ_report

    report["invariant_failures"] = failures
    (run_dir / "verify_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if failures:
        for f in failures:
            print(f"INVARIANT FAIL: {f}", file=sys.stderr)
        return 1
    print("verify: all invariants hold")
    return 0


# -- entry -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flockwatch",
        description="Follower-dynamics forensics toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="build a world and persist ground truth")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("observe", help="run the samplers against a simulated run")
    p.add_argument("--run", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--budget", required=True)
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("detect", help="run detectors over stored observations")
    p.add_argument("--run", required=True)
    p.add_argument("--params", default=None)
    p.add_argument("--format", choices=("csv", "ndrec"), default="csv")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("verify", help="check detections against ground truth")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        return _fail(str(exc), 2)
    except ValidationError as exc:
        return _fail(str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
