"""Shannon rates and SIC feasibility for paired users.

Gains passed here are squared amplitudes h^2 and powers are in mW. Rates are
returned in bit/s when ``sub_bw`` is the subcarrier bandwidth B/S and in
bits per channel use with the default ``sub_bw=1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SameRRH


def rate_single(p, h2, noise, sub_bw=1.0):
    return sub_bw * math.log2(1.0 + p * h2 / noise)


def rate_second(p2, p1, h2, noise, sub_bw=1.0):
    """Rate of the weaker user, which sees the first user's signal as noise."""
    return sub_bw * math.log2(1.0 + p2 * h2 / (p1 * h2 + noise))


def ftpa_power(p1, h1, h2, alpha):
    """Second-user power from the fractional transmit power rule."""
    return p1 * (h1 / h2) ** alpha


@dataclass(frozen=True)
class PairLink:
    """Four cross gains of a pair: ``h_ab`` is user a seen from RRH b.

    User 1 is the first user powered by ``r1``, user 2 the candidate second
    user powered by ``r2``.
    """

    h11: float
    h12: float
    h21: float
    h22: float
    noise: float = 1.0
    p1: float = 0.0
    p2: float = 0.0
    r1: int = 0
    r2: int = 1

    def with_powers(self, p1, p2) -> "PairLink":
        return PairLink(self.h11, self.h12, self.h21, self.h22, self.noise, p1, p2, self.r1, self.r2)


def mutual_sic_feasible(link: PairLink) -> bool:
    if link.r1 == link.r2:
        raise SameRRH("one RRH cannot serve a mutual-SIC pair")
    return link.h12 >= link.h22 and link.h21 >= link.h11


def mux_ratio_bounds(link: PairLink) -> tuple[float, float]:
    """Admissible band of p2 / p1 for mutual SIC."""
    return link.h11 / link.h12, link.h21 / link.h22


def single_sic_drrh_ok(link: PairLink) -> bool:
    """Multiplexing conditions when only the first user performs SIC."""
    p1, p2 = link.p1, link.p2
    return p1 * link.h11 <= p2 * link.h12 and p2 * link.h22 >= p1 * link.h21


def sic_margin_ok(p1, p2, mu) -> bool:
    return p2 >= p1 * (1.0 + mu)


def srrh_sic_surplus(p1, p2, h1, h2, noise):
    """Decoding-rate surpluses on a single-RRH pair, bits per channel use.

    Returns ``(s1, s2)``: ``s1`` is what user 1 can decode of user 2's
    signal minus user 2's own rate, ``s2`` the converse. SIC at a user is
    possible when its surplus is nonnegative.
    """
    own2 = math.log2(1.0 + p2 * h2 / (p1 * h2 + noise))
    at1 = math.log2(1.0 + p2 * h1 / (p1 * h1 + noise))
    own1 = math.log2(1.0 + p1 * h1 / noise)
    at2 = math.log2(1.0 + p1 * h2 / (p2 * h2 + noise))
    return at1 - own2, at2 - own1


def mutual_sic_surplus(link: PairLink):
    """Exact surpluses when both users run SIC and see interference-free rates.

    Unlike the feasibility rule, this keeps the product term of the
    interference, so negative values flag where the approximation
    behind the mutual-SIC conditions breaks.
    """
    p1, p2, s = link.p1, link.p2, link.noise
    own1 = math.log2(1.0 + p1 * link.h11 / s)
    own2 = math.log2(1.0 + p2 * link.h22 / s)
    at1 = math.log2(1.0 + p2 * link.h12 / (p1 * link.h11 + s))
    at2 = math.log2(1.0 + p1 * link.h21 / (p2 * link.h22 + s))
    return at1 - own2, at2 - own1
