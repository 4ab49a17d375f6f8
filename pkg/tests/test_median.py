import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from medsketch.median import (
    DiscreteDist, empirical_moment, median_along, median_moment_bound, median_odd,
    random_discrete_dist, sample_median_of_iid, sample_medians, tightness_dist,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_median_odd_examples():
    assert median_odd([5]) == 5
    assert median_odd([3, 1, 2]) == 2
    assert median_odd([-1, -1, 7]) == -1
    for bad in ([], [1, 2]):
        with pytest.raises(ValueError):
            median_odd(bad)


@given(st.lists(finite, min_size=1, max_size=9).filter(lambda x: len(x) % 2 == 1), st.randoms())
def test_median_odd_permutation_invariant_and_member(values, rnd):
    shuffled = values[:]
    rnd.shuffle(shuffled)
    m = median_odd(values)
    assert m == median_odd(shuffled)
    assert m in values
    assert m == sorted(values)[len(values) // 2]


@given(st.lists(finite, min_size=3, max_size=7).filter(lambda x: len(x) % 2 == 1),
       st.integers(0, 6), st.floats(0, 1e3))
def test_median_odd_monotone(values, i, bump):
    i %= len(values)
    raised = values[:]
    raised[i] += bump
    assert median_odd(raised) >= median_odd(values)


def test_median_along_matches_median_odd():
    arr = np.random.default_rng(0).normal(size=(20, 5))
    assert np.array_equal(median_along(arr, axis=1), [median_odd(r) for r in arr])
    with pytest.raises(ValueError):
        median_along(np.zeros((2, 4)), axis=1)


def test_empirical_moment_examples():
    assert empirical_moment([2.0, 2.0, 2.0], 2.0, 3) == 0.0
    assert empirical_moment([-1, 1], 0, 2) == 1.0
    assert empirical_moment([0, 0, 4], 1, 1) == pytest.approx(5 / 3)
    assert empirical_moment([-1, 3], 0, 2, absolute=False) == empirical_moment([-1, 3], 0, 2)
    with pytest.raises(ValueError):
        empirical_moment([], 0, 1)
    with pytest.raises(ValueError):
        empirical_moment([1.0], 0, 0)


def test_tightness_dist():
    assert tightness_dist(2).support == [(0.0, 0.5), (2.0, 0.5)]
    assert tightness_dist(4).support == [(0.0, 0.75), (4.0, 0.25)]
    for k in (2, 3, 10, 100):
        assert tightness_dist(k).mean() == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        tightness_dist(1)


def test_discrete_dist_validation_and_merging():
    d = DiscreteDist([1.0, 1.0 + 1e-14, 2.0, 3.0], [0.25, 0.25, 0.5, 0.0])
    assert d.support == [(1.0, 0.5), (2.0, 0.5)]
    with pytest.raises(ValueError):
        DiscreteDist([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        DiscreteDist([0.0], [-1.0])
    assert DiscreteDist.point_mass(3.0).moment(2) == 9.0


def test_sample_median_point_mass():
    rng = np.random.default_rng(0)
    assert sample_median_of_iid(DiscreteDist.point_mass(7.0), 3, rng) == 7.0


def test_sample_medians_majority_of_coins():
    meds = sample_medians(DiscreteDist([0.0, 1.0], [0.5, 0.5]), 2, 10**6, np.random.default_rng(1))
    assert abs(np.mean(meds == 1.0) - 0.5) <= 0.005


def test_sample_medians_tightness_four():
    meds = sample_medians(tightness_dist(4), 2, 10**6, np.random.default_rng(2))
    assert abs(np.mean(meds == 4.0) - 10 / 64) <= 0.005


def test_median_moment_bound_value():
    # uniform {-1, 1}: E|X| = 1, t=2, q=2 gives 3 * 1
    assert median_moment_bound(DiscreteDist([-1.0, 1.0], [0.5, 0.5]), 2, 2) == 3.0


def test_random_discrete_dist_shape():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = random_discrete_dist(rng)
        assert 2 <= len(d) <= 6
        assert np.all(np.abs(d.values) <= 10)
        assert abs(d.probs.sum() - 1) <= 1e-12
