import numpy as np
import pytest
from hypothesis import given, strategies as st

from flockwatch.detectors import (
    find_inversions,
    global_dominant,
    outside_dominant_share,
    stratify,
)
from flockwatch.domain import ValidationError


def ids_of_digits(digits, n, offset=0):
    lo = 10 ** (digits - 1)
    return [lo + offset + i for i in range(n)]


def test_batch_arithmetic():
    ids = ids_of_digits(18, 12000)
    batches = stratify(ids, batch=5000)
    assert [b.size for b in batches] == [5000, 5000, 2000]
    assert [b.index for b in batches] == [0, 1, 2]


def test_homogeneous_list_proportion_one():
    batches = stratify(ids_of_digits(18, 9000))
    assert all(b.histogram == {18: 1.0} for b in batches)


def test_proportions_sum_to_one_mixed():
    ids = ids_of_digits(9, 2500) + ids_of_digits(17, 2500) + ids_of_digits(18, 5000)
    for b in stratify(ids):
        assert abs(sum(b.histogram.values()) - 1.0) <= 1e-9


def test_empty_list_rejected():
    with pytest.raises(ValidationError):
        stratify([])


@given(
    st.lists(
        st.tuples(st.integers(min_value=2, max_value=19), st.integers(1, 40)),
        min_size=1,
        max_size=12,
    )
)
def test_stratify_reconstructs_input_counts(blocks):
    ids = []
    for digits, n in blocks:
        ids.extend(ids_of_digits(digits, n))
    batches = stratify(ids, batch=25)
    assert sum(b.size for b in batches) == len(ids)
    for b in batches:
        assert abs(sum(b.histogram.values()) - 1.0) <= 1e-9
        # Proportions recover integer per-batch counts.
        for d, p in b.histogram.items():
            assert abs(p * b.size - round(p * b.size)) < 1e-6


def test_homogeneous_no_inversions():
    batches = stratify(ids_of_digits(18, 100000))
    assert find_inversions(batches) == []


def test_reservoir_like_inversion_region():
    ids = (
        ids_of_digits(18, 100000)
        + ids_of_digits(9, 30000)
        + ids_of_digits(10, 30000)
        + ids_of_digits(18, 100000, offset=200000)
    )
    batches = stratify(ids, batch=5000)
    regions = find_inversions(batches, min_run=10)
    assert len(regions) == 1
    region = regions[0]
    assert region.start == 20 and region.end == 31
    assert set(region.dominant_classes) == {9, 10}
    assert global_dominant(batches) == 18
    assert outside_dominant_share(batches, regions) == 1.0


def test_short_inversion_run_ignored():
    ids = (
        ids_of_digits(18, 50000)
        + ids_of_digits(9, 20000)
        + ids_of_digits(18, 50000, offset=100000)
    )
    batches = stratify(ids, batch=5000)
    assert find_inversions(batches, min_run=10) == []
    assert len(find_inversions(batches, min_run=4)) == 1


def test_tie_prefers_global_dominant():
    # Exactly half and half in some batches: ties do not open an inversion.
    ids = []
    for _ in range(60):
        ids.extend(ids_of_digits(18, 50))
        ids.extend(ids_of_digits(9, 50))
    batches = stratify(ids, batch=100)
    assert all(b.histogram == {9: 0.5, 18: 0.5} for b in batches)
    assert find_inversions(batches, min_run=1) == []


def test_stratify_numpy_input():
    arr = np.asarray(ids_of_digits(19, 1000), dtype=np.uint64)
    (batch,) = stratify(arr, batch=1000)
    assert batch.histogram == {19: 1.0}
