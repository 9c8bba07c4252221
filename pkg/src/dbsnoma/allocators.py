"""End-to-end allocation strategies.

Every method starts with the Worst-Best-H initialization followed by greedy
single-user (OMA) assignment; the NOMA methods then pair second users onto
subcarriers that still hold a single user. Ties are broken by the lowest
user, subcarrier and RRH index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelTensor
from .errors import AllRemoved, NoFeasibleCase, RootBracketFailure
from .params import SystemParams
from .power_adjust import dpa_adjust, lpo_power, opad_joint, sopad_adjust
from .rates import PairLink
from .state import (
    CATEGORY_NAMES,
    MUTUAL_SIC,
    SINGLE_SIC_DRRH,
    SINGLE_SIC_SRRH,
    AllocationState,
)
from .waterfilling import (
    add_subcarrier,
    admit_check,
    apply_rate_change,
    insert_subcarrier,
    make_account,
    powers_from_waterline,
    release_weakest,
)

# sole subcarriers below this power (mW) count as unused when a user retires
ZERO_POWER = 1e-12


class Method(str, enum.Enum):
    OMA_CBS = "OMA_CBS"
    NOMA_CBS = "NOMA_CBS"
    OMA_DBS = "OMA_DBS"
    NOMA_DBS_SRRH = "NOMA_DBS_SRRH"
    NOMA_DBS_SRRH_LPO = "NOMA_DBS_SRRH_LPO"
    NOMA_DBS_MUTSIC_UC = "NOMA_DBS_MUTSIC_UC"
    NOMA_DBS_MUTSIC_DPA = "NOMA_DBS_MUTSIC_DPA"
    NOMA_DBS_MUTSIC_OPAD = "NOMA_DBS_MUTSIC_OPAD"
    NOMA_DBS_MUTSIC_SOPAD = "NOMA_DBS_MUTSIC_SOPAD"
    NOMA_DBS_MUT_AND_SINGSIC = "NOMA_DBS_MUT_AND_SINGSIC"

    @property
    def centralized(self) -> bool:
        return self in (Method.OMA_CBS, Method.NOMA_CBS)


FTPA = "ftpa"
LPO = "lpo"
UC, DPA, OPAD, SOPAD = "uc", "dpa", "opad", "sopad"


# -- phase 1 and 2 ----------------------------------------------------------

def worst_best_h_init(channel: ChannelTensor, params: SystemParams) -> AllocationState:
    """Give each user one subcarrier, weakest users choosing first."""
    state = AllocationState(channel, params.rate_norm)
    g = state.gain
    R = state.num_rrh
    best = g.max(axis=(1, 2))
    for k in sorted(range(state.num_users), key=lambda k: (best[k], k)):
        masked = np.where(state.available[:, None], g[k], -np.inf)
        n, r = divmod(int(np.argmax(masked)), R)
        state.take(k, n, r, make_account([g[k, n, r]], [n], params.rate_norm))
    return state


def oma_assign(state: AllocationState, params: SystemParams) -> AllocationState:
    """Greedy single-user assignment.

    The user with the largest total power receives its best free
    (subcarrier, RRH) pair whenever that lowers its power by more than the
    threshold; otherwise it leaves the active set.
    """
    g = state.gain
    best_r = g.argmax(axis=2)
    best_g = np.take_along_axis(g, best_r[:, :, None], axis=2)[:, :, 0]
    rho = params.threshold_mw
    active = np.ones(state.num_users, dtype=bool)
    while active.any():
        avail = state.available
        if not avail.any():
            break
        state.iterations += 1
        k = int(np.argmax(np.where(active, state.power, -np.inf)))
        n = int(np.argmax(np.where(avail, best_g[k], -np.inf)))
        gain = float(best_g[k, n])
        acc = state.users[k].sole
        if admit_check(acc.waterline, gain):
            w_new, delta = add_subcarrier(acc.waterline, acc.size, gain)
            if delta < -rho:
                state.take(k, n, int(best_r[k, n]), acc.with_added(gain, n, w_new))
                continue
        active[k] = False
    return state


# -- pairing helpers --------------------------------------------------------

def _second_deltas(acc, p2, rate_gain) -> np.ndarray:
    """Power change of the second user for each candidate (inf if infeasible)."""
    n2, w = acc.size, acc.waterline
    w_new = w * np.exp2(-rate_gain / n2)
    delta = n2 * (w_new - w) + p2
    for i in np.flatnonzero(w_new * acc.weakest_gain <= 1.0):
        try:
            _, _, delta[i] = apply_rate_change(acc, -float(rate_gain[i]), float(p2[i]))
        except AllRemoved:
            delta[i] = np.inf
    return delta


def _retire(state: AllocationState, k: int, active: np.ndarray) -> None:
    """Free the user's zero-power sole subcarriers and drop it from the active set."""
    acc = state.users[k].sole
    if acc.size > 1:
        count = int(np.count_nonzero(powers_from_waterline(acc) < ZERO_POWER))
        if 0 < count < acc.size:
            new_acc, removed = release_weakest(acc, count)
            state.set_sole(k, new_acc)
            state.release(removed)
    active[k] = False


def _single_candidates(state: AllocationState, k2: int):
    cand = np.flatnonzero(state.single & (state.owner != k2))
    return cand, state.owner[cand], state.owner_rrh[cand]


def _commit(state, n, k2, r2, p1, p2, rate_gain, category, first_account=None, first_removed=()):
    acc2, removed2, _ = apply_rate_change(state.users[k2].sole, -rate_gain, p2)
    state.pair(int(n), k2, int(r2), float(p1), float(p2), category,
               first_account, first_removed, acc2, removed2)


def _pick_user(state: AllocationState, active: np.ndarray) -> int:
    return int(np.argmax(np.where(active, state.power, -np.inf)))


# -- single-RRH pairing -----------------------------------------------------

def pair_srrh(state: AllocationState, params: SystemParams, power_rule: str = FTPA) -> AllocationState:
    """Pair second users served by the first user's RRH (FTPA or LPO powers)."""
    g = state.gain
    rho, alpha, mu = params.threshold_mw, params.ftpa_alpha, params.safety_margin
    active = np.ones(state.num_users, dtype=bool)
    while active.any():
        state.iterations += 1
        k2 = _pick_user(state, active)
        acc2 = state.users[k2].sole
        cand, k1, r1 = _single_candidates(state, k2)
        if acc2.size == 0 or cand.size == 0:
            _retire(state, k2, active)
            continue
        g1 = g[k1, cand, r1]
        g2 = g[k2, cand, r1]
        ok = g2 < g1
        cand, k1, r1, g1, g2 = cand[ok], k1[ok], r1[ok], g1[ok], g2[ok]
        if cand.size == 0:
            _retire(state, k2, active)
            continue
        p1 = state.waterline[k1] - 1.0 / g1
        if power_rule == FTPA:
            p2 = p1 * (g1 / g2) ** alpha
        else:
            p2 = lpo_power(acc2.waterline, acc2.size, p1, g2, 1.0, mu)
        rate_gain = np.log2(1.0 + p2 * g2 / (p1 * g2 + 1.0))
        delta = _second_deltas(acc2, p2, rate_gain)
        i = int(np.argmin(delta))
        if delta[i] < -rho:
            _commit(state, cand[i], k2, r1[i], p1[i], p2[i], float(rate_gain[i]), SINGLE_SIC_SRRH)
        else:
            _retire(state, k2, active)
    return state


# -- mutual-SIC pairing -----------------------------------------------------

def _mutual_candidates(state: AllocationState, k2: int):
    """(n, r2) couples allowing mutual SIC and admitted by k2's waterline."""
    g = state.gain
    cand, k1, r1 = _single_candidates(state, k2)
    if cand.size == 0:
        return None
    rows = np.arange(cand.size)
    g_k1 = g[k1, cand, :]  # first user seen from every RRH
    g_k2 = g[k2, cand, :]
    g11 = g_k1[rows, r1]
    g21 = g_k2[rows, r1]
    r2_grid = np.arange(state.num_rrh)[None, :]
    mask = ((r2_grid != r1[:, None]) & (g_k1 >= g_k2) & (g21 >= g11)[:, None]
            & (g_k2 * state.waterline[k2] > 1.0))
    row, r2 = np.nonzero(mask)
    if row.size == 0:
        return None
    return dict(n=cand[row], k1=k1[row], r1=r1[row], r2=r2,
                g11=g11[row], g12=g_k1[row, r2], g21=g21[row], g22=g_k2[row, r2])


def _opad_inputs(state, c, i):
    link = PairLink(c["g11"][i], c["g12"][i], c["g21"][i], c["g22"][i], 1.0,
                    r1=int(c["r1"][i]), r2=int(c["r2"][i]))
    return link, state.users[int(c["k1"][i])].sole, int(c["n"][i])


def _commit_joint(state, c, i, k2, outcome):
    """Commit an OPAd outcome, re-waterfilling the first user if p1 moved."""
    n, k1 = int(c["n"][i]), int(c["k1"][i])
    g11 = float(c["g11"][i])
    acc1 = state.users[k1].sole
    p1_init = acc1.power_of(n)
    first_account, first_removed = None, ()
    if outcome.p1 != p1_init:
        gain_rate = math.log2((1.0 + outcome.p1 * g11) / (1.0 + p1_init * g11))
        first_account, first_removed, _ = apply_rate_change(
            acc1.without(n), -gain_rate, outcome.p1 - p1_init)
    rate_gain = math.log2(1.0 + outcome.p2 * float(c["g22"][i]))
    _commit(state, n, k2, c["r2"][i], outcome.p1, outcome.p2, rate_gain, MUTUAL_SIC,
            first_account, first_removed)
    state.root_solves += outcome.root_solves


def pair_mutsic(state: AllocationState, params: SystemParams, variant: str = SOPAD) -> AllocationState:
    """Pair second users on subcarriers where both users can run SIC."""
    rho, mu = params.threshold_mw, params.safety_margin
    active = np.ones(state.num_users, dtype=bool)
    while active.any():
        state.iterations += 1
        k2 = _pick_user(state, active)
        acc2 = state.users[k2].sole
        c = _mutual_candidates(state, k2) if acc2.size else None
        if c is None:
            _retire(state, k2, active)
            continue
        g22 = c["g22"]
        p1 = state.waterline[c["k1"]] - 1.0 / c["g11"]
        w_new = np.exp((acc2.size * math.log(acc2.waterline) - np.log(g22)) / (acc2.size + 1))
        # a candidate stronger than k2's weakest sole subcarrier can push it below zero
        for i in np.flatnonzero(w_new * acc2.weakest_gain <= 1.0):
            w_new[i] = insert_subcarrier(acc2, float(g22[i]), -1)[0].waterline
        p2_wf = w_new - 1.0 / g22

        if variant == OPAD:
            best, best_out = None, None
            for i in range(len(g22)):
                link, acc1, n = _opad_inputs(state, c, i)
                try:
                    out = opad_joint(link, acc1, n, acc2, mu)
                except (NoFeasibleCase, RootBracketFailure):
                    continue
                state.root_solves += out.root_solves
                if best_out is None or out.delta_power < best_out.delta_power:
                    best, best_out = i, out
            if best_out is not None and best_out.delta_power < -rho:
                _commit_joint(state, c, best, k2, best_out)
                # already counted while ranking
                state.root_solves -= best_out.root_solves
            else:
                _retire(state, k2, active)
            continue

        if variant == UC:
            p2 = p2_wf
        else:
            lower = c["g11"] / c["g12"]
            upper = c["g21"] / g22
            ratio = p2_wf / p1
            p2 = np.where(ratio < lower, p1 * lower * (1.0 + mu),
                          np.where(ratio > upper, p1 * upper * (1.0 - mu), p2_wf))
        rate_gain = np.log2(1.0 + p2 * g22)
        delta = _second_deltas(acc2, p2, rate_gain)
        if variant != UC:
            delta[lower * (1.0 + mu) > upper * (1.0 - mu)] = np.inf
        i = int(np.argmin(delta))

        if variant == SOPAD and np.isfinite(delta[i]):
            link, acc1, n = _opad_inputs(state, c, i)
            dpa = dpa_adjust(float(p2_wf[i]), float(p1[i]), (float(lower[i]), float(upper[i])),
                             mu, acc2, float(g22[i]))
            out = sopad_adjust(dpa, link, acc1, n, acc2, mu)
            if out.delta_power < -rho:
                _commit_joint(state, c, i, k2, out)
            else:
                _retire(state, k2, active)
            continue

        if delta[i] < -rho:
            _commit(state, c["n"][i], k2, c["r2"][i], p1[i], p2[i], float(rate_gain[i]), MUTUAL_SIC)
        else:
            _retire(state, k2, active)
    return state


# -- single-SIC pairing over any RRH ----------------------------------------

def pair_single_sic(state: AllocationState, params: SystemParams) -> AllocationState:
    """Pair second users where only the first user runs SIC, from any RRH.

    Same-RRH candidates need the second user to be weaker on the first
    user's RRH; different-RRH candidates need the first user to hear the
    second user's RRH at least as well as the second user does, while the
    mutual-SIC condition fails. Powers follow LPO with the tighter of the
    two multiplexing ratios as floor.
    """
    g = state.gain
    rho, mu = params.threshold_mw, params.safety_margin
    active = np.ones(state.num_users, dtype=bool)
    while active.any():
        state.iterations += 1
        k2 = _pick_user(state, active)
        acc2 = state.users[k2].sole
        cand, k1, r1 = _single_candidates(state, k2)
        if acc2.size == 0 or cand.size == 0:
            _retire(state, k2, active)
            continue
        rows = np.arange(cand.size)
        g_k1 = g[k1, cand, :]
        g_k2 = g[k2, cand, :]
        g11 = g_k1[rows, r1]
        g21 = g_k2[rows, r1]
        same = np.arange(state.num_rrh)[None, :] == r1[:, None]
        weaker_on_r1 = (g21 < g11)[:, None]
        mask = weaker_on_r1 & (same | (g_k1 >= g_k2))
        row, r2 = np.nonzero(mask)
        if row.size == 0:
            _retire(state, k2, active)
            continue
        k1, r1, n = k1[row], r1[row], cand[row]
        g11, g21 = g11[row], g21[row]
        g12, g22 = g_k1[row, r2], g_k2[row, r2]
        p1 = state.waterline[k1] - 1.0 / g11
        floor = np.maximum(g11 / g12, g21 / g22)
        p2 = lpo_power(acc2.waterline, acc2.size, p1, g22, 1.0, mu,
                       interference=g21, lower_ratio=floor)
        rate_gain = np.log2(1.0 + p2 * g22 / (p1 * g21 + 1.0))
        delta = _second_deltas(acc2, p2, rate_gain)
        i = int(np.argmin(delta))
        if delta[i] < -rho:
            category = SINGLE_SIC_SRRH if r2[i] == r1[i] else SINGLE_SIC_DRRH
            _commit(state, n[i], k2, r2[i], p1[i], p2[i], float(rate_gain[i]), category)
        else:
            _retire(state, k2, active)
    return state


def pair_mut_and_single(state: AllocationState, params: SystemParams) -> AllocationState:
    pair_mutsic(state, params, SOPAD)
    return pair_single_sic(state, params)


# -- audit and dispatch -----------------------------------------------------

@dataclass
class AuditReport:
    """Independent recomputation of rates, powers and multiplexing constraints."""

    method: str
    total_power_mw: float
    max_rate_error: float
    rates_ok: bool
    constraints_ok: bool
    categories: dict
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.rates_ok and self.constraints_ok


def audit(state: AllocationState, rate_tol: float = 1e-6, mux_tol: float = 1e-9) -> AuditReport:
    g = state.gain
    violations = []
    rates = np.zeros(state.num_users)
    for k, user in enumerate(state.users):
        for n, p in zip(user.sole.ids, powers_from_waterline(user.sole)):
            if p < 0:
                violations.append(f"user {k}: negative power {p} on sole subcarrier {n}")
            rates[k] += math.log2(1.0 + p * g[k, n, state.owner_rrh[n]])
        for n, p in user.first.items():
            rates[k] += math.log2(1.0 + p * g[k, n, state.owner_rrh[n]])
        for n, p in user.second.items():
            k1, r1, r2 = state.owner[n], state.owner_rrh[n], state.second_rrh[n]
            p1 = state.users[k1].first[n]
            if state.category[n] == MUTUAL_SIC:
                rates[k] += math.log2(1.0 + p * g[k, n, r2])
            else:
                rates[k] += math.log2(1.0 + p * g[k, n, r2] / (p1 * g[k, n, r1] + 1.0))
    rate_err = np.abs(rates - state.rate_norm) / state.rate_norm
    for k in np.flatnonzero(rate_err > rate_tol):
        violations.append(f"user {k}: rate {rates[k]:.12g} vs required {state.rate_norm:.12g}")

    skip_mutual = state.method == Method.NOMA_DBS_MUTSIC_UC
    constraints_ok = True
    for n in np.flatnonzero(state.second_user >= 0):
        k1, k2 = state.owner[n], state.second_user[n]
        r1, r2 = state.owner_rrh[n], state.second_rrh[n]
        p1, p2 = state.users[k1].first[n], state.users[k2].second[n]
        cat = state.category[n]
        h11, h12, h21, h22 = g[k1, n, r1], g[k1, n, r2], g[k2, n, r1], g[k2, n, r2]
        slack = 1.0 - mux_tol
        if cat == SINGLE_SIC_SRRH:
            ok = r1 == r2 and p2 >= p1 * slack
        elif cat == MUTUAL_SIC:
            ok = r1 != r2
            if not skip_mutual:
                ratio = p2 / p1
                ok = ok and h11 / h12 * slack <= ratio <= h21 / h22 / slack
        elif cat == SINGLE_SIC_DRRH:
            ok = r1 != r2 and p1 * h11 * slack <= p2 * h12 and p2 * h22 >= p1 * h21 * slack
        else:
            ok = False
        if not ok or p1 < 0 or p2 < 0:
            constraints_ok = False
            violations.append(f"subcarrier {n}: {CATEGORY_NAMES[int(cat)]} constraint violated "
                              f"(p1={p1:.6g}, p2={p2:.6g})")
    return AuditReport(
        method=str(state.method.value if state.method else None),
        total_power_mw=state.total_power(),
        max_rate_error=float(rate_err.max()),
        rates_ok=bool(np.all(rate_err <= rate_tol)),
        constraints_ok=constraints_ok,
        categories=state.category_counts(),
        violations=violations,
    )


def run_method(method, channel: ChannelTensor, params: SystemParams) -> AllocationState:
    """Run one allocation method end to end and attach its audit report."""
    method = Method(method)
    if method.centralized:
        channel = channel.center_only()
    state = worst_best_h_init(channel, params)
    oma_assign(state, params)
    if method in (Method.NOMA_CBS, Method.NOMA_DBS_SRRH):
        pair_srrh(state, params, FTPA)
    elif method == Method.NOMA_DBS_SRRH_LPO:
        pair_srrh(state, params, LPO)
    elif method == Method.NOMA_DBS_MUTSIC_UC:
        pair_mutsic(state, params, UC)
    elif method == Method.NOMA_DBS_MUTSIC_DPA:
        pair_mutsic(state, params, DPA)
    elif method == Method.NOMA_DBS_MUTSIC_OPAD:
        pair_mutsic(state, params, OPAD)
    elif method == Method.NOMA_DBS_MUTSIC_SOPAD:
        pair_mutsic(state, params, SOPAD)
    elif method == Method.NOMA_DBS_MUT_AND_SINGSIC:
        pair_mut_and_single(state, params)
    state.method = method
    state.report = audit(state)
    return state
