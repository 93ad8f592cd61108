from flockwatch.detectors import (
    ancient_registry_stats,
    correlate_circulation_vs_effect,
)


def test_split_sides_and_signs():
    low = [(float(e), 2.0 * e) for e in (1e5, 5e5, 1e6, 5e6, 1e7)]
    high = [(e, 1e8 / e) for e in (2e7, 5e7, 1e8, 5e8)]
    split = correlate_circulation_vs_effect(low + high, critical=15_000_000)
    assert split.n_low == 5 and split.n_high == 4
    assert split.low_r > 0.9
    assert split.high_r < -0.5


def test_side_with_too_few_points_undefined():
    points = [(1e5, 1.0), (2e5, 2.0), (3e5, 3.0), (2e7, 4.0)]
    split = correlate_circulation_vs_effect(points)
    assert split.low_r is not None
    assert split.high_r is None
    assert split.n_high == 1


def test_all_points_one_side():
    points = [(1e5, 1.0), (2e5, 2.0), (3e5, 3.0)]
    split = correlate_circulation_vs_effect(points)
    assert split.low_r is not None and split.high_r is None
    assert split.n_high == 0


def test_constant_side_undefined():
    points = [(1e5, 5.0), (2e5, 5.0), (3e5, 5.0)]
    split = correlate_circulation_vs_effect(points)
    assert split.low_r is None  # zero variance in y


def test_ancient_registry_stats_arithmetic():
    registry = {10_000_000 + i for i in range(100)}  # 8-digit ids
    count, fraction = ancient_registry_stats(registry, ancient_population=1000)
    assert count == 100
    assert fraction == 0.1


def test_ancient_registry_ignores_modern_ids():
    registry = {10**17 + i for i in range(50)} | {10_000_000}
    count, fraction = ancient_registry_stats(registry, ancient_population=10)
    assert count == 1
    assert fraction == 0.1


def test_empty_inputs():
    count, fraction = ancient_registry_stats(set(), ancient_population=0)
    assert count == 0 and fraction == 0.0
