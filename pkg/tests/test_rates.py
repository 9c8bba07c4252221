import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbsnoma.errors import SameRRH
from dbsnoma.rates import (
    PairLink,
    ftpa_power,
    mutual_sic_feasible,
    mutual_sic_surplus,
    mux_ratio_bounds,
    rate_second,
    rate_single,
    sic_margin_ok,
    single_sic_drrh_ok,
    srrh_sic_surplus,
)

SUB_BW = 10e6 / 64
positive = st.floats(min_value=1e-4, max_value=1e4, allow_nan=False)


def test_rate_single_examples():
    assert rate_single(1.0, 2.0, 2.0, SUB_BW) == pytest.approx(SUB_BW)
    assert rate_single(0.0, 2.0, 2.0, SUB_BW) == 0.0
    assert rate_single(3.0, 1.0, 1.0, SUB_BW) == pytest.approx(2 * SUB_BW)


def test_rate_second_examples():
    assert rate_second(2.0, 0.0, 1.5, 0.5) == rate_single(2.0, 1.5, 0.5)
    assert rate_second(1.0, 1.0, 1.0, 1.0, SUB_BW) == pytest.approx(math.log2(1.5) * SUB_BW)
    assert rate_second(0.0, 1.0, 1.0, 1.0) == 0.0


@settings(max_examples=200)
@given(positive, positive, positive, positive, st.floats(min_value=1.01, max_value=10))
def test_rate_second_monotonicity(p2, p1, h2, noise, factor):
    assert rate_second(p2 * factor, p1, h2, noise) > rate_second(p2, p1, h2, noise)
    assert rate_second(p2, p1 * factor, h2, noise) < rate_second(p2, p1, h2, noise)


def test_ftpa_examples():
    assert ftpa_power(3.0, 2.0, 2.0, 0.5) == 3.0
    assert ftpa_power(3.0, 8.0, 2.0, 0.0) == 3.0
    assert ftpa_power(3.0, 4.0, 1.0, 0.5) == pytest.approx(6.0)


def test_mutual_sic_examples():
    link = PairLink(h11=1.0, h12=4.0, h21=4.0, h22=1.0)
    assert mutual_sic_feasible(link)
    assert mux_ratio_bounds(link) == (0.25, 4.0)
    assert not mutual_sic_feasible(PairLink(h11=5.0, h12=5.0, h21=1.0, h22=1.0))
    equal = PairLink(2.0, 2.0, 2.0, 2.0)
    assert mutual_sic_feasible(equal)
    assert mux_ratio_bounds(equal) == (1.0, 1.0)
    with pytest.raises(SameRRH):
        mutual_sic_feasible(PairLink(1.0, 4.0, 4.0, 1.0, r1=2, r2=2))


@settings(max_examples=500)
@given(positive, positive, positive, positive)
def test_band_is_nonempty_when_mutual_sic_is_feasible(a, b, c, d):
    link = PairLink(a, b, c, d)
    if mutual_sic_feasible(link):
        lower, upper = mux_ratio_bounds(link)
        assert lower <= upper


def test_single_sic_drrh_examples():
    same = PairLink(3.0, 3.0, 1.0, 1.0)
    assert single_sic_drrh_ok(same.with_powers(1.0, 1.0))
    assert not single_sic_drrh_ok(same.with_powers(1.0, 0.99))
    link = PairLink(h11=5.0, h12=2.0, h21=1.0, h22=1.5)
    assert single_sic_drrh_ok(link.with_powers(1e-6, 1e3))
    assert not single_sic_drrh_ok(link.with_powers(1.0, 1.0))


def test_margin_examples():
    assert sic_margin_ok(1.0, 1.0, 0.0)
    assert sic_margin_ok(1.0, 1.01, 0.01)
    assert not sic_margin_ok(1.0, 1.0, 0.01)


def _decode_surplus_oracle(p1, p2, h1, h2, noise):
    """R_k2 decoded at k1 minus R_k2 at k2, as a closed-form difference of SINRs."""
    x = p2 * h1 / (p1 * h1 + noise)
    y = p2 * h2 / (p1 * h2 + noise)
    return x - y


def test_weaker_user_can_never_cancel_the_stronger_one():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        h1, h2 = sorted(10 ** rng.uniform(-3, 3, 2), reverse=True)
        p1, p2 = 10 ** rng.uniform(-3, 3, 2)
        s1, s2 = srrh_sic_surplus(p1, p2, h1, h2, 1.0)
        assert s1 >= 0.0
        assert s2 <= 0.0
        assert math.copysign(1, s1) == math.copysign(1, _decode_surplus_oracle(p1, p2, h1, h2, 1.0) or 1.0)


def test_exact_mutual_surplus_is_short_only_by_the_cross_term():
    rng = np.random.default_rng(1)
    trials = 10_000
    violations = 0
    for _ in range(trials):
        h11, h22 = 10 ** rng.uniform(-2, 2, 2)
        h12 = h22 * 10 ** rng.uniform(0, 2)
        h21 = h11 * 10 ** rng.uniform(0, 2)
        link = PairLink(h11, h12, h21, h22)
        assert mutual_sic_feasible(link)
        lower, upper = mux_ratio_bounds(link)
        p1 = 10 ** rng.uniform(-3, 2)
        p2 = p1 * math.exp(rng.uniform(math.log(lower), math.log(upper)))
        s1, s2 = mutual_sic_surplus(link.with_powers(p1, p2))
        cross = p1 * p2 * h11 * h22
        x_minus_y = p2 * (h12 - h22) - cross
        z_minus_t = p1 * (h21 - h11) - cross
        # surplus signs follow the numerators; the dropped term is the only shortfall
        assert math.copysign(1, s1) == math.copysign(1, x_minus_y) or abs(x_minus_y) < 1e-12 * cross
        assert math.copysign(1, s2) == math.copysign(1, z_minus_t) or abs(z_minus_t) < 1e-12 * cross
        assert x_minus_y >= -cross and z_minus_t >= -cross
        violations += min(s1, s2) < 0
    # the approximation fails often once SNR is high; the rate is a diagnostic, not a bound
    print(f"exact mutual-SIC violations: {violations / trials:.1%}")
    assert 0 < violations < trials
