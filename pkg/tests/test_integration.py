"""Cross-module properties that need the simulator, samplers and detectors
together."""

from flockwatch.detectors import DetectorParams, detect_circulations
from flockwatch.sampler import ObservationRun, RateBudget, SamplePlan
from flockwatch.simulator import (
    BehaviorScript,
    PopulationCohort,
    Scenario,
    SimConnector,
    TargetSpec,
    build_world,
)

DAY = 86400.0


def circulation_run(growth, seed=4000, noise=0.0, cohort=600):
    """One day of E2-style sampling against a circulating cohort."""
    organic_cap = int(growth * DAY * 1.1) + 5000
    sc = Scenario(
        seed=seed,
        duration=DAY,
        ordering_noise=noise,
        population=(
            PopulationCohort(
                size=organic_cap + 4000, creation_era_digits=18,
                organic_follow_rate=growth, initial_follow_fraction=0.0,
            ),
            PopulationCohort(size=3000, creation_era_digits=17, initial_follow_fraction=1.0),
        ),
        targets=(TargetSpec(handle="t", category="individual"),),
        behaviors=(
            BehaviorScript(
                kind="circulation", target="t", cohort_size=cohort,
                schedule=(0.0,), period=21600.0, phase_spread=1.0,
            ),
        ),
    )
    world = build_world(sc)
    uid = world.uid_for_handle("t")
    plan = SamplePlan(watchlist=("t",), count_polling=False)
    budget = RateBudget(follower_pages_per_window=2, window_seconds=10800.0)
    run = ObservationRun(SimConnector(world), plan, budget, {"t": uid}, world.start)
    _, samples = run.poll(sc.duration)
    records = detect_circulations(samples[uid], DetectorParams().noise_margin)
    truth = world.ground_truth.circulation_refollows(uid)
    return records, truth


def test_monotone_undercount_with_growth():
    # Past window/cycle saturation, more growth never improves the detected
    # fraction of true circulations.
    ratios = []
    for growth in (1.2, 2.4, 4.8):
        records, truth = circulation_run(growth)
        detected = sum(r.circulations for r in records)
        ratios.append(detected / sum(truth.values()))
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[0] < 1.0


def test_circulation_soundness_noise_free():
    records, truth = circulation_run(0.4, cohort=200)
    for rec in records:
        assert truth.get(rec.follower, 0) >= 1
        assert rec.circulations <= truth[rec.follower]


def test_circulation_false_positive_rate_measured_under_noise():
    records, truth = circulation_run(0.4, noise=0.01, cohort=200)
    detected = sum(r.circulations for r in records)
    false = sum(
        max(0, r.circulations - truth.get(r.follower, 0)) for r in records
    )
    rate = false / detected if detected else 0.0
    # The margin keeps swap noise out; the measurement itself is the
    # contract (never hidden), not a zero.
    assert detected > 0
    assert rate <= 0.05


def test_tunnel_two_and_a_half_million_followers_is_500_pages(tmp_path):
    from flockwatch.store import Store

    sc = Scenario(
        seed=2500,
        duration=600.0,
        population=(
            PopulationCohort(
                size=2_500_000, creation_era_digits=18, initial_follow_fraction=1.0
            ),
        ),
        targets=(TargetSpec(handle="big", category="individual"),),
    )
    world = build_world(sc)
    uid = world.uid_for_handle("big")
    plan = SamplePlan(
        watchlist=("big",), tunnel_targets=("big",),
        count_polling=False, recent_sampling=False,
    )
    store = Store(tmp_path)
    run = ObservationRun(SimConnector(world), plan, RateBudget(), {"big": uid}, world.start, store)
    ids = run.tunnel_followers("big")
    assert len(ids) == 2_500_000
    pages = list(store.scan("tunnel_page"))
    assert len(pages) == 500
    assert all(len(r.payload["ids"]) == 5000 for r in pages)
