from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from flockwatch.detectors import (
    CountSeries,
    InsufficientData,
    ORGANIC_STEP,
    SAWTOOTH,
    SPIKE,
    detect_waveforms,
    summarize_waveforms,
)
from flockwatch.detectors.waveforms import WaveformEvent


def series(values, t0=0, dt=1):
    times = tuple(t0 + i * dt for i in range(len(values)))
    return CountSeries(target=1, times=times, counts=tuple(values))


def flat(n, level=1000):
    return [level] * n


def test_constant_series_no_events():
    assert detect_waveforms(series(flat(200))) == []


def test_single_positive_spike_shape():
    values = flat(100) + [1500] + flat(100)
    events = detect_waveforms(series(values))
    assert len(events) == 1
    ev = events[0]
    assert ev.kind == SPIKE
    assert ev.effect == 500.0
    assert ev.t_start == 100
    assert ev.t_end == 101
    assert ev.baseline == 1000.0


def test_single_negative_spike_shape():
    values = flat(100) + [750, 750] + flat(100)
    events = detect_waveforms(series(values))
    assert len(events) == 1
    assert events[0].kind == SPIKE
    assert events[0].effect == -250.0


def test_sawtooth_shape_and_effect():
    values = flat(100) + [800] * 200
    events = detect_waveforms(series(values))
    assert len(events) == 1
    ev = events[0]
    assert ev.kind == SAWTOOTH
    assert ev.effect == -200.0
    assert ev.t_start == 100


def test_positive_step_labeled_organic():
    values = flat(100) + [1300] * 200
    events = detect_waveforms(series(values))
    assert [e.kind for e in events] == [ORGANIC_STEP]
    assert events[0].effect == 300.0


def test_below_threshold_ignored():
    values = flat(100) + [1030] + flat(100)  # theta_abs = 50
    assert detect_waveforms(series(values)) == []


def test_spike_then_sawtooth_sequence():
    values = flat(100) + [1400] + flat(150) + [700] * 150
    events = detect_waveforms(series(values))
    assert [e.kind for e in events] == [SPIKE, SAWTOOTH]
    assert events[0].effect == 400.0
    assert events[1].effect == -300.0


def test_events_never_overlap():
    values = flat(50) + [1500] + flat(80) + [1800] + flat(80)
    events = detect_waveforms(series(values))
    assert len(events) == 2
    assert events[0].t_end <= events[1].t_start


def test_insufficient_data_error():
    with pytest.raises(InsufficientData):
        detect_waveforms(series(flat(10)))


def test_gap_splits_segments():
    # Each side of a 2000s hole is analyzed independently; the level change
    # across the hole is not an event.
    left = flat(100, 1000)
    right = flat(100, 3000)
    times = tuple(list(range(100)) + [2000 + i for i in range(100)])
    s = CountSeries(target=1, times=times, counts=tuple(left + right))
    assert detect_waveforms(s) == []


def test_mad_raises_threshold_for_noisy_series():
    # Noisy deltas push theta above theta_abs: 5 * MAD(|diff|).
    values = []
    level = 10000
    for i in range(300):
        level += (-1) ** i * 30  # one-step deltas of 30, MAD 30 -> theta 150
        values.append(level)
    values += [values[-1] + 100] + values[-1:] * 2  # +100 excursion < 150
    events = detect_waveforms(series(values))
    assert events == []


def test_summarize_zeroes_on_empty():
    stats = summarize_waveforms([], observed_seconds=86400.0)
    assert stats.spike_count == 0
    assert stats.spikes_per_day == 0
    assert stats.avg_spike_effect == 0
    assert stats.net_spike_effect == 0


def test_summarize_arithmetic():
    events = [
        WaveformEvent(SPIKE, 10, 11, +10.0, 100.0),
        WaveformEvent(SPIKE, 50, 51, -4.0, 100.0),
    ]
    stats = summarize_waveforms(events, observed_seconds=86400.0)
    assert stats.spikes_per_day == 2.0
    assert stats.avg_spike_effect == Fraction(3)
    assert stats.net_spike_effect == Fraction(6)


def test_summarize_identity_with_half_integer_effects():
    events = [
        WaveformEvent(SPIKE, 1, 2, 10.5, 100.0),
        WaveformEvent(SPIKE, 5, 6, 7.5, 100.0),
        WaveformEvent(SPIKE, 9, 10, -3.0, 100.0),
    ]
    stats = summarize_waveforms(events, observed_seconds=3600.0)
    assert stats.avg_spike_effect * stats.spike_count == stats.net_spike_effect


def test_summarize_excludes_unobserved_gap():
    events = [WaveformEvent(SPIKE, 10, 11, 5.0, 0.0)]
    stats = summarize_waveforms(events, observed_seconds=2 * 86400.0,
                                unobserved_seconds=86400.0)
    assert stats.spikes_per_day == 1.0


def test_table_row_consistency_net_equals_rate_avg_days():
    # Published-style row: 608 spikes/day averaging 7,422 over ~106.8 days
    # nets ~481.7M; our summary reproduces that internal arithmetic.
    days = 106.755
    n = round(608 * days)
    events = [
        WaveformEvent(SPIKE, i, i + 1, 7422.0, 0.0) for i in range(n)
    ]
    stats = summarize_waveforms(events, observed_seconds=days * 86400.0)
    assert abs(stats.spikes_per_day - 608) < 0.5
    net = float(stats.net_spike_effect)
    assert abs(net - 481_740_537) / 481_740_537 < 1e-3
    assert stats.avg_spike_effect == Fraction(7422)


@given(
    st.lists(
        st.tuples(
            st.sampled_from([SPIKE, SAWTOOTH]),
            st.integers(min_value=-10**6, max_value=10**6),
        ),
        max_size=50,
    ),
    st.floats(min_value=60.0, max_value=10 * 86400.0),
)
def test_net_equals_avg_times_count_exactly(kinds_effects, duration):
    events = [
        WaveformEvent(kind, i, i + 1, float(effect), 0.0)
        for i, (kind, effect) in enumerate(kinds_effects)
    ]
    stats = summarize_waveforms(events, observed_seconds=duration)
    assert stats.avg_spike_effect * stats.spike_count == stats.net_spike_effect
    assert stats.avg_sawtooth_effect * stats.sawtooth_count == stats.net_sawtooth_effect
