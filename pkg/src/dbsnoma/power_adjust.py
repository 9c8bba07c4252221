"""Second-user power rules beyond FTPA: LPO, DPA and the joint OPAd solve.

Inputs follow :mod:`dbsnoma.waterfilling`: accounts hold normalized gains and
waterlines in mW; link gains are squared amplitudes with their own noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import AllRemoved, InfeasibleBand, NoFeasibleCase, RootBracketFailure
from .rates import PairLink
from .waterfilling import WaterfillAccount, admit_check, apply_rate_change, insert_subcarrier

INTERIOR = "interior"
CLAMPED_LOWER = "clamped_lower"
CLAMPED_UPPER = "clamped_upper"
REJECTED = "rejected"


@dataclass(frozen=True)
class AdjustOutcome:
    p1: float
    p2: float
    delta_power: float
    case: str
    delta_first: float = 0.0
    delta_second: float = 0.0
    root_solves: int = 0
    residual: float = 0.0


def lpo_power(waterline, size, p1, h2, noise, mu, *, interference=None, lower_ratio=1.0):
    """Second-user power minimizing the user's net power change.

    ``interference`` is the gain through which the first user's signal
    reaches the second user (the same RRH by default); ``lower_ratio`` is the
    smallest admissible p2 / p1 before the safety margin is applied.
    """
    g2 = h2 / noise
    gi = g2 if interference is None else interference / noise
    a = g2 / (p1 * gi + 1.0)
    p_star = ((waterline * a) ** (size / (size + 1.0)) - 1.0) / a
    return np.maximum(p_star, p1 * lower_ratio * (1.0 + mu))


def lpo_delta_power(p2, waterline, size, p1, h2, noise, *, interference=None):
    """Net power change of the second user when its sole set absorbs the new rate."""
    g2 = h2 / noise
    gi = g2 if interference is None else interference / noise
    x = p2 * g2 / (p1 * gi + 1.0)
    return size * waterline * ((1.0 + x) ** (-1.0 / size) - 1.0) + p2


def _second_delta(account: WaterfillAccount, gain: float, p2: float) -> float:
    """Power change of a second user that gains an interference-free rate."""
    _, _, delta = apply_rate_change(account, -math.log2(1.0 + p2 * gain), p2)
    return delta


def dpa_adjust(p2_wf, p1, bounds, mu, account: WaterfillAccount, gain) -> AdjustOutcome:
    """Clamp the waterfilling power to the mutual-SIC band.

    ``gain`` is the second user's normalized gain on the candidate; the power
    change of a clamped value is recomputed through the waterline rescale.
    """
    lower, upper = bounds
    if lower * (1.0 + mu) > upper * (1.0 - mu):
        raise InfeasibleBand(f"band [{lower}, {upper}] is empty with margin {mu}")
    ratio = p2_wf / p1
    if ratio < lower:
        p2 = p1 * lower * (1.0 + mu)
        case = CLAMPED_LOWER
    elif ratio > upper:
        p2 = p1 * upper * (1.0 - mu)
        case = CLAMPED_UPPER
    else:
        delta = _second_delta(account, gain, p2_wf)
        return AdjustOutcome(p1, p2_wf, delta, INTERIOR, 0.0, delta)
    delta = _second_delta(account, gain, p2)
    return AdjustOutcome(p1, p2, delta, case, 0.0, delta)


def opad_residual(p1, c, g11, w_first, size_first, g22, w_second, size_second):
    """Derivative of the pair's total power change along the ray p2 = c * p1.

    ``size_first`` counts the first user's sole subcarriers including the
    shared one. Zero at the optimum of a pinned case.
    """
    m = size_first - 1
    q = (1.0 / g11 + p1) / w_first
    first = 1.0 - q ** (-(m + 1.0) / m)
    second = 1.0 - w_second * g22 * (1.0 + c * p1 * g22) ** (-(size_second + 1.0) / size_second)
    return first + c * second


def _waterline_after(account: WaterfillAccount, delta_rate) -> float:
    """Waterline once the sole set carries ``delta_rate`` more bits (0 if it carries none)."""
    try:
        new, _, _ = apply_rate_change(account, delta_rate)
    except AllRemoved:
        return 0.0
    return new.waterline


def ray_residual(p1, c, g11, p1_init, acc1_rest: WaterfillAccount, g22,
                 acc2: WaterfillAccount) -> float:
    """Derivative of the pair's total power change along p2 = c * p1.

    Uses that the waterfilled power of a sole set grows at ``w ln 2`` per
    bit whatever subcarriers it keeps, so it stays exact when either user
    drops subcarriers; it reduces to :func:`opad_residual` otherwise.
    """
    x1 = 1.0 + p1 * g11
    w1 = _waterline_after(acc1_rest, -math.log2(x1 / (1.0 + p1_init * g11)))
    x2 = 1.0 + c * p1 * g22
    w2 = _waterline_after(acc2, -math.log2(x2))
    return (1.0 - w1 * g11 / x1) + c * (1.0 - w2 * g22 / x2)


# fraction of the sole-set emptying power kept as a ceiling on p1
_CAP_SHRINK = 1.0 - 1e-12


def _pinned_case(c, case, p1_init, g11, acc1_rest: WaterfillAccount, w_first, size_first,
                 g22, acc2: WaterfillAccount, p1_hi, cap):
    """Optimum of the total power change along p2 = c * p1, or None.

    ``cap`` is the p1 at which either user's shared subcarrier alone would
    carry its whole rate; a root beyond it is pulled back just below, since
    the cost keeps decreasing up to that edge.
    """
    root_solves = 0
    residual = 0.0
    if size_first == 1:
        # the shared subcarrier is the first user's only sole one: p1 cannot move
        p1 = p1_init
    else:
        args = (c, g11, p1_init, acc1_rest, g22, acc2)
        if ray_residual(0.0, *args) >= 0.0:
            return None
        hi = p1_hi
        for _ in range(8):
            if ray_residual(hi, *args) > 0.0:
                break
            hi *= 10.0
        else:
            raise RootBracketFailure(f"no sign change of the stationarity equation on (0, {hi}]")
        p1 = brentq(ray_residual, 0.0, hi, args=args, xtol=1e-300, rtol=1e-15, maxiter=400)
        root_solves = 1
        residual = ray_residual(p1, *args)
        if p1 <= 0.0:
            return None
        p1 = min(p1, cap * _CAP_SHRINK)
    p2 = c * p1
    try:
        if size_first == 1:
            d1 = 0.0
        else:
            gain_rate = math.log2((1.0 + p1 * g11) / (1.0 + p1_init * g11))
            _, _, d1 = apply_rate_change(acc1_rest, -gain_rate, p1 - p1_init)
        d2 = _second_delta(acc2, g22, p2)
    except AllRemoved:
        return None
    return AdjustOutcome(p1, p2, d1 + d2, case, d1, d2, root_solves, residual)


def opad_joint(link: PairLink, account1: WaterfillAccount, sub_id, account2: WaterfillAccount,
               mu) -> AdjustOutcome:
    """Jointly adjust both powers on a mutual-SIC candidate.

    ``account1`` is the first user's sole account, which still contains the
    shared subcarrier ``sub_id``; its current waterline and power there are
    the starting point. The problem is convex, so the unconstrained
    waterfilling point is kept when it lies in the band; otherwise the pair is
    pinned to the violated edge (moved inward by the margin) and the
    stationarity equation is solved along that edge. The opposite edge is
    tried only if the first fails.
    """
    noise = link.noise
    g11 = link.h11 / noise
    g22 = link.h22 / noise
    lower, upper = link.h11 / link.h12, link.h21 / link.h22
    w_first = account1.waterline
    size_first = account1.size
    p1_init = w_first - 1.0 / g11
    acc1_rest = account1.without(sub_id)

    p2_wf = None
    if admit_check(account2.waterline, g22):
        joined, _, d_wf = insert_subcarrier(account2, g22, -1)
        p2_wf = joined.waterline - 1.0 / g22
        ratio = p2_wf / p1_init
        if lower <= ratio <= upper:
            return AdjustOutcome(p1_init, p2_wf, d_wf, INTERIOR, 0.0, d_wf)

    p1_hi = 1e4 * max(p1_init, p2_wf / lower if p2_wf is not None else 0.0)
    p1_full = (2.0 ** account1.rate() - 1.0) / g11
    p2_full = (2.0 ** account2.rate() - 1.0) / g22
    pins = []
    if lower * (1.0 + mu) <= upper:
        pins.append((lower * (1.0 + mu), CLAMPED_LOWER))
    if upper * (1.0 - mu) >= lower:
        pins.append((upper * (1.0 - mu), CLAMPED_UPPER))
    if p2_wf is not None and p2_wf / p1_init > upper:
        pins.reverse()
    solves = 0
    for c, case in pins:
        out = _pinned_case(c, case, p1_init, g11, acc1_rest, w_first, size_first,
                           g22, account2, p1_hi, min(p1_full, p2_full / c))
        if out is not None:
            if solves:
                out = AdjustOutcome(out.p1, out.p2, out.delta_power, out.case, out.delta_first,
                                    out.delta_second, out.root_solves + solves, out.residual)
            return out
        solves += 1 if size_first > 1 else 0
    raise NoFeasibleCase("no case of the joint adjustment gives positive powers")


def sopad_adjust(dpa: AdjustOutcome, link: PairLink, account1: WaterfillAccount, sub_id,
                 account2: WaterfillAccount, mu) -> AdjustOutcome:
    """Joint adjustment on the candidate picked by DPA ranking.

    Falls back to the DPA powers when the joint solve finds no feasible case
    or does worse.
    """
    try:
        opad = opad_joint(link, account1, sub_id, account2, mu)
    except NoFeasibleCase:
        return dpa
    if opad.delta_power <= dpa.delta_power:
        return opad
    return AdjustOutcome(dpa.p1, dpa.p2, dpa.delta_power, dpa.case, dpa.delta_first,
                         dpa.delta_second, opad.root_solves, dpa.residual)
