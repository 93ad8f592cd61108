import pytest

from flockwatch.detectors import (
    FollowerSample,
    circulation_series,
    detect_circulations,
)
from flockwatch.detectors.circulation import CirculationRecord
from flockwatch.domain import ValidationError


def sample(t, ids, cycle=0):
    return FollowerSample(target=9, t=t, cycle=cycle, ids=tuple(ids))


def test_static_list_no_circulations():
    ids = list(range(100, 160))
    samples = [sample(t, ids) for t in (0, 100, 200, 300)]
    assert detect_circulations(samples) == []


def test_growth_only_burial_no_circulations():
    # Followers accumulate on top; old ones sink and fall out. No re-follows.
    base = list(range(1000, 1100))
    samples = []
    for k, t in enumerate((0, 100, 200, 300)):
        newcomers = list(range(2000 + 40 * k, 2000 + 40 * (k + 1)))[::-1]
        if samples:
            window = newcomers + list(samples[-1].ids[: 100 - 40])
        else:
            window = base
        samples.append(sample(t, window[:100]))
    assert detect_circulations(samples) == []


def test_definitional_refollow_detected():
    # X sits at rank 3; disappears while deeper ids persist; reappears at
    # rank 0 above ids that outranked it before -> one circulation.
    deeper = [50, 51, 52, 53, 54, 55]
    x = 99
    s1 = sample(0, [10, 11, 12, x] + deeper)
    s2 = sample(100, [10, 11, 12] + deeper)
    s3 = sample(200, [x, 10, 11, 12] + deeper)
    records = detect_circulations([s1, s2, s3])
    assert len(records) == 1
    rec = records[0]
    assert rec.follower == x
    assert rec.circulations == 1
    assert rec.episodes == [(0, 0), (200, 200)]


def test_refollow_without_disappearing_still_detected():
    # The id jumps the queue between consecutive samples.
    others = [70, 71, 72, 73, 74, 75]
    x = 42
    s1 = sample(0, others + [x])
    s2 = sample(100, [x] + others)
    records = detect_circulations([s1, s2])
    assert [r.follower for r in records] == [x]


def test_noise_margin_suppresses_adjacent_swaps():
    ids = list(range(500, 540))
    swapped = ids.copy()
    swapped[10], swapped[11] = swapped[11], swapped[10]
    samples = [sample(0, ids), sample(100, swapped), sample(200, ids)]
    assert detect_circulations(samples, noise_margin=3) == []
    # Margin zero would flag the swap; that is what the margin is for.
    assert len(detect_circulations(samples, noise_margin=0)) >= 1


def test_margin_does_not_hide_deep_jumps():
    ids = list(range(500, 540))
    jumped = [ids[20]] + ids[:20] + ids[21:]
    samples = [sample(0, ids), sample(100, jumped)]
    records = detect_circulations(samples, noise_margin=3)
    assert [r.follower for r in records] == [ids[20]]


def test_unsorted_samples_rejected():
    s1 = sample(100, [1, 2, 3])
    s2 = sample(50, [1, 2, 3])
    with pytest.raises(ValidationError):
        detect_circulations([s1, s2])


def test_mixed_targets_rejected():
    s1 = sample(0, [1, 2, 3])
    s2 = FollowerSample(target=8, t=100, cycle=0, ids=(1, 2, 3))
    with pytest.raises(ValidationError):
        detect_circulations([s1, s2])


def test_multiple_circulations_accumulate_episodes():
    quiet = [800, 801, 802, 803, 804, 805]
    x = 7
    samples = []
    t = 0
    for k in range(4):
        samples.append(sample(t, quiet + [x]))
        t += 50
        samples.append(sample(t, [x] + quiet))
        t += 50
    records = detect_circulations([samples[0], *samples[1:]])
    (rec,) = records
    assert rec.circulations == 4  # one per jump back to the top


def test_circulation_series_uniform_rate():
    # 120 circulations spread over 10 days ~= 12/day.
    records = []
    day = 86400
    for i in range(120):
        t_open = (i * 10 * day) // 120
        records.append(
            CirculationRecord(follower=i, target=9, episodes=[(0, 0), (t_open, t_open)])
        )
    sample_times = list(range(0, 10 * day, 3600))
    buckets = circulation_series(records, sample_times, bucket=day)
    assert len(buckets) == 10
    assert all(b.observed for b in buckets)
    assert all(b.count == 12 for b in buckets)


def test_circulation_series_flags_unobserved():
    day = 86400
    records = [CirculationRecord(follower=1, target=9, episodes=[(0, 0), (10, 10)])]
    sample_times = [0, 3600, 4 * day, 4 * day + 3600]
    buckets = circulation_series(records, sample_times, bucket=day)
    assert [b.observed for b in buckets] == [True, False, False, False, True]
    assert buckets[0].count == 1
    assert all(b.count == 0 for b in buckets[1:])


def test_circulation_series_empty_records_all_zero():
    buckets = circulation_series([], [0, 86400, 2 * 86400], bucket=86400)
    assert all(b.count == 0 for b in buckets)
    assert len(buckets) == 3
