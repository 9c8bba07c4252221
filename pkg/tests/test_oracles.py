import math

import numpy as np
import pytest

from dbsnoma.errors import InstanceTooLarge
from dbsnoma.oracles import (
    dichotomy_waterfill,
    exhaustive_small_alloc,
    grid_min_delta_power,
    relative_gap,
    rowwise_waterfill_power,
    textbook_waterfill_power,
    waterfill_power,
)


def test_dichotomy_single_subcarrier():
    w = dichotomy_waterfill([2.0], 3.0)
    assert w == pytest.approx(4.0, rel=1e-11)


def test_dichotomy_excludes_weak_subcarrier():
    # with one bit over gains (4, 0.01) only the strong subcarrier is used
    w = dichotomy_waterfill([4.0, 0.01], 1.0)
    assert w == pytest.approx(0.5, rel=1e-11)
    assert waterfill_power([4.0, 0.01], 1.0) == pytest.approx(0.25, rel=1e-11)


def test_dichotomy_two_equal_subcarriers():
    w = dichotomy_waterfill([1.0, 1.0], 4.0)
    assert w == pytest.approx(4.0, rel=1e-11)
    assert waterfill_power([1.0, 1.0], 4.0) == pytest.approx(6.0, rel=1e-11)


def test_closed_form_oracles_agree_with_bisection():
    rng = np.random.default_rng(2)
    for _ in range(200):
        gains = 10 ** rng.uniform(-2, 2, int(rng.integers(1, 9)))
        rate = rng.uniform(0.5, 40)
        expected = waterfill_power(gains, rate)
        assert textbook_waterfill_power(gains, [rate])[0] == pytest.approx(expected, rel=1e-9)
        assert rowwise_waterfill_power(gains[None, :], rate)[0] == pytest.approx(expected, rel=1e-9)


def test_grid_quadratic_within_one_cell():
    res = grid_min_delta_power(lambda x: (x - 0.3137) ** 2, [(0.0, 1.0)], 101)
    assert abs(res.argmin[0] - 0.3137) <= res.resolution[0]
    refined = grid_min_delta_power(lambda x: (x - 0.3137) ** 2, [(0.0, 1.0)], 101, refine=4)
    assert abs(refined.argmin[0] - 0.3137) <= refined.resolution[0]
    assert refined.resolution[0] < res.resolution[0] and refined.levels == 5


def test_grid_two_dimensions():
    res = grid_min_delta_power(lambda x, y: (x - 1) ** 2 + 3 * (y + 0.5) ** 2,
                               [(-2, 2), (-2, 2)], 81, refine=3)
    assert res.argmin == pytest.approx((1.0, -0.5), abs=1e-3)


def test_exhaustive_rejects_large_instances():
    with pytest.raises(InstanceTooLarge):
        exhaustive_small_alloc(np.ones((4, 4, 1)), 1.0)
    with pytest.raises(InstanceTooLarge):
        exhaustive_small_alloc(np.ones((2, 7, 1)), 1.0)


def test_exhaustive_single_user_uses_best_waterfilling():
    gains = np.array([[[4.0, 1.0], [2.0, 3.0], [0.5, 0.1]]])
    res = exhaustive_small_alloc(gains, 6.0)
    best = waterfill_power([4.0, 3.0, 0.5], 6.0)
    assert res.total_power == pytest.approx(best, rel=1e-9)
    assert res.assignment[0] == (0, 0) and res.assignment[1] == (0, 1)


def test_exhaustive_counts_for_two_by_two():
    gains = np.array([[[1.0], [2.0]], [[3.0], [1.0]]])
    res = exhaustive_small_alloc(gains, 2.0)
    assert res.partitions == 2 and res.configurations == 2
    # user 1 on subcarrier 0, user 0 on subcarrier 1
    assert res.assignment == ((1, 0), (0, 0))
    assert res.total_power == pytest.approx(3 / 3 + 3 / 2)


def test_relative_gap():
    assert relative_gap(1.0, 1.0) == 0.0
    assert relative_gap(1.0, -1.0) == 2.0
    assert math.isclose(relative_gap(100.0, 101.0), 1 / 101)
