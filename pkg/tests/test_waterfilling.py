import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbsnoma.errors import AllRemoved, EmptySet
from dbsnoma.oracles import dichotomy_waterfill
from dbsnoma.waterfilling import (
    WaterfillAccount,
    add_subcarrier,
    admit_check,
    apply_rate_change,
    batch_remove_negative,
    insert_subcarrier,
    make_account,
    pairing_power_delta,
    powers_from_waterline,
    release_weakest,
    rescale_waterline_for_rate_delta,
    waterline_from_rate,
)

gain_values = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
gain_lists = st.lists(gain_values, min_size=1, max_size=16)
rates = st.floats(min_value=0.5, max_value=80.0)


@pytest.mark.parametrize("gains, rate, expected", [
    ([1.0], 1.0, 2.0),
    ([1.0, 1.0], 2.0, 2.0),
    ([1.0, 0.25], 2.0, 4.0),
])
def test_waterline_from_rate_examples(gains, rate, expected):
    w = waterline_from_rate(gains, rate)
    assert w == pytest.approx(expected, rel=1e-15)
    assert sum(math.log2(w * g) for g in gains) == pytest.approx(rate, rel=1e-12)
    assert dichotomy_waterfill(gains, rate) == pytest.approx(expected, rel=1e-10)


def test_waterline_of_empty_set_raises():
    with pytest.raises(EmptySet):
        waterline_from_rate([], 1.0)


def test_powers_from_waterline_examples():
    np.testing.assert_allclose(powers_from_waterline(WaterfillAccount(2.0, (1.0,), (0,))), [1.0])
    acc = make_account([1.0, 0.25], [0, 1], 2.0)
    np.testing.assert_allclose(powers_from_waterline(acc), [3.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("w, g, expected", [(2.0, 0.6, True), (2.0, 0.5, False), (2.0, 0.4, False)])
def test_admit_check_boundary(w, g, expected):
    assert admit_check(w, g) is expected


def test_add_subcarrier_examples():
    w, delta = add_subcarrier(2.0, 1, 2.0)
    assert w == pytest.approx(1.0) and delta == pytest.approx(-0.5)
    # two-subcarrier rate-constrained optimum by bisection
    assert w == pytest.approx(dichotomy_waterfill([1.0, 2.0], 1.0), rel=1e-10)
    w, delta = add_subcarrier(2.0, 1, 0.5)
    assert w == pytest.approx(2.0) and delta == pytest.approx(0.0, abs=1e-15)


def test_repeated_equal_adds_follow_closed_form():
    g, w1 = 3.0, 5.0
    w, size = w1, 1
    prev = w
    for n in range(2, 10):
        w, _ = add_subcarrier(w, size, g)
        size += 1
        assert w == pytest.approx((w1 / g ** (n - 1)) ** (1 / n), rel=1e-13)
        assert w < prev
        prev = w


@pytest.mark.parametrize("w, size, dr, expected", [(2.0, 1, 0.0, 2.0), (2.0, 1, -1.0, 1.0), (4.0, 2, -2.0, 2.0)])
def test_rescale_examples(w, size, dr, expected):
    assert rescale_waterline_for_rate_delta(w, size, dr) == pytest.approx(expected)


def test_rescale_drops_rate_by_exactly_the_delta():
    acc = make_account([1.0, 0.5], [0, 1], 6.0)
    w_new = rescale_waterline_for_rate_delta(acc.waterline, 2, -2.0)
    new_rate = sum(math.log2(w_new * g) for g in acc.gains)
    assert acc.rate() - new_rate == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("w, size, w_new, pair, expected", [
    (2.0, 1, 2.0, 0.0, 0.0), (2.0, 1, 1.0, 0.4, -0.6), (4.0, 2, 2.0, 1.0, -3.0)])
def test_pairing_power_delta_examples(w, size, w_new, pair, expected):
    assert pairing_power_delta(w, size, w_new, pair) == pytest.approx(expected)
    gains = (1.0,) * size
    before = WaterfillAccount(w, gains).total_power()
    after = WaterfillAccount(w_new, gains).total_power() + pair
    assert after - before == pytest.approx(expected)


def test_batch_removal_example():
    acc = WaterfillAccount(2.0, (4.0, 1.0), (0, 1))
    new, removed, delta = batch_remove_negative(acc, 0.9)
    assert removed == (1,)
    assert new.waterline == pytest.approx(0.81)
    assert new.power_of(0) == pytest.approx(0.56)
    target = sum(math.log2(0.9 * g) for g in acc.gains)
    assert new.rate() == pytest.approx(target, rel=1e-12)
    assert delta == pytest.approx(new.total_power() - acc.total_power())


def test_rate_change_without_negatives_delegates_to_pairing_delta():
    acc = make_account([4.0, 2.0], [0, 1], 6.0)
    new, removed, delta = apply_rate_change(acc, -1.0, 0.3)
    assert removed == ()
    w_new = rescale_waterline_for_rate_delta(acc.waterline, 2, -1.0)
    assert delta == pytest.approx(pairing_power_delta(acc.waterline, 2, w_new, 0.3))


def test_rate_change_that_empties_the_set_raises():
    acc = make_account([4.0, 2.0], [0, 1], 2.0)
    with pytest.raises(AllRemoved):
        apply_rate_change(acc, -10.0)


@settings(max_examples=300, deadline=None)
@given(gain_lists, rates, st.floats(min_value=0.01, max_value=0.99))
def test_rate_change_conserves_the_new_target(gains, rate, frac):
    acc = make_account(gains, list(range(len(gains))), rate)
    if min(powers_from_waterline(acc)) < 0:
        return
    try:
        new, removed, delta = apply_rate_change(acc, -frac * rate, 0.0)
    except AllRemoved:
        return
    assert new.rate() == pytest.approx((1 - frac) * rate, rel=1e-9)
    assert min(powers_from_waterline(new)) >= -1e-12 * new.waterline
    assert delta == pytest.approx(new.total_power() - acc.total_power(), rel=1e-9, abs=1e-9 * acc.total_power())
    assert set(removed) | set(new.ids) == set(acc.ids)


@settings(max_examples=300, deadline=None)
@given(gain_lists, rates)
def test_recursive_adds_match_dichotomy_oracle(gains, rate):
    g = sorted(gains, reverse=True)
    acc = make_account(g[:1], [0], rate)
    for i, gain in enumerate(g[1:], 1):
        if admit_check(acc.waterline, gain):
            w, _ = add_subcarrier(acc.waterline, acc.size, gain)
            acc = acc.with_added(gain, i, w)
    w_ref = dichotomy_waterfill(g, rate)
    p_ref = sum(max(w_ref - 1 / x, 0.0) for x in g)
    assert acc.waterline == pytest.approx(w_ref, rel=1e-9)
    assert acc.total_power() == pytest.approx(p_ref, rel=1e-9)
    assert min(powers_from_waterline(acc)) >= -1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(gain_values, min_size=2, max_size=12), rates, gain_values)
def test_insert_matches_oracle_even_when_not_weakest(gains, rate, extra):
    acc = make_account(gains, list(range(len(gains))), rate)
    if min(powers_from_waterline(acc)) < 0 or not admit_check(acc.waterline, extra):
        return
    new, removed, delta = insert_subcarrier(acc, extra, 99)
    w_ref = dichotomy_waterfill(list(acc.gains) + [extra], rate)
    assert new.waterline == pytest.approx(w_ref, rel=1e-9)
    assert 99 in new.ids and 99 not in removed
    assert delta < 0


def test_release_weakest_keeps_rate():
    acc = make_account([8.0, 4.0, 2.0, 1.0], [0, 1, 2, 3], 10.0)
    new, removed = release_weakest(acc, 2)
    assert removed == (2, 3)
    assert new.rate() == pytest.approx(acc.rate(), rel=1e-12)
    with pytest.raises(AllRemoved):
        release_weakest(acc, 4)


def test_higher_gain_gets_higher_power():
    acc = make_account([5.0, 3.0, 2.0, 1.5], [0, 1, 2, 3], 12.0)
    p = powers_from_waterline(acc)
    assert np.all(np.diff(p) < 0)
