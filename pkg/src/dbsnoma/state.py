"""Mutable bookkeeping of one allocation run."""

from __future__ import annotations

import math

import numpy as np

from .channel import ChannelTensor
from .waterfilling import WaterfillAccount

UNALLOC = -1
NONMUX = 0
MUTUAL_SIC = 1
SINGLE_SIC_SRRH = 2
SINGLE_SIC_DRRH = 3

CATEGORY_NAMES = {
    NONMUX: "non-mux",
    MUTUAL_SIC: "mutual-SIC",
    SINGLE_SIC_SRRH: "single-SIC-SRRH",
    SINGLE_SIC_DRRH: "single-SIC-DRRH",
    UNALLOC: "unallocated",
}


class UserState:
    """Sole waterfilling account plus frozen powers on paired subcarriers."""

    __slots__ = ("sole", "first", "second")

    def __init__(self):
        self.sole = WaterfillAccount(0.0)
        self.first = {}
        self.second = {}

    def total_power(self) -> float:
        return self.sole.total_power() + sum(self.first.values()) + sum(self.second.values())


class AllocationState:
    """Who uses which subcarrier, through which RRH, at what power.

    Subcarrier ``n`` is owned by its first (or sole) user ``owner[n]`` via
    ``owner_rrh[n]``; a second user, if any, is ``second_user[n]`` via
    ``second_rrh[n]``. An owned subcarrier without a second user stays in its
    owner's sole waterfilling account until it is paired, at which point the
    owner's power on it is frozen.
    """

    def __init__(self, channel: ChannelTensor, rate_norm: float):
        self.channel = channel
        self.gain = channel.snr_gain
        K, S, R = self.gain.shape
        self.num_users, self.num_subcarriers, self.num_rrh = K, S, R
        self.rate_norm = rate_norm
        self.users = [UserState() for _ in range(K)]
        self.owner = np.full(S, -1)
        self.owner_rrh = np.full(S, -1)
        self.second_user = np.full(S, -1)
        self.second_rrh = np.full(S, -1)
        self.category = np.full(S, UNALLOC)
        self.waterline = np.zeros(K)
        self.sole_size = np.zeros(K, dtype=int)
        self.weakest = np.full(K, math.inf)
        self.power = np.zeros(K)
        self.iterations = 0
        self.root_solves = 0
        self.method = None
        self.report = None

    # -- queries ---------------------------------------------------------
    @property
    def available(self) -> np.ndarray:
        return self.owner < 0

    @property
    def single(self) -> np.ndarray:
        """Owned subcarriers without a second user."""
        return (self.owner >= 0) & (self.second_user < 0)

    def total_power(self) -> float:
        return float(self.power.sum())

    def first_power(self, n) -> float:
        """Current power of the owner of ``n``, frozen or waterfilled."""
        k = self.owner[n]
        if n in self.users[k].first:
            return self.users[k].first[n]
        return self.users[k].sole.power_of(n)

    def category_counts(self) -> dict:
        counts = {name: 0 for name in CATEGORY_NAMES.values()}
        for code in self.category:
            counts[CATEGORY_NAMES[int(code)]] += 1
        return counts

    # -- mutations -------------------------------------------------------
    def set_sole(self, k, account: WaterfillAccount) -> None:
        self.users[k].sole = account
        self.waterline[k] = account.waterline
        self.sole_size[k] = account.size
        self.weakest[k] = account.weakest_gain if account.size else math.inf
        self.power[k] = self.users[k].total_power()

    def take(self, k, n, r, account: WaterfillAccount) -> None:
        """Give free subcarrier ``n`` to ``k`` as a sole subcarrier."""
        self.owner[n] = k
        self.owner_rrh[n] = r
        self.category[n] = NONMUX
        self.set_sole(k, account)

    def release(self, ids) -> None:
        for n in ids:
            self.owner[n] = -1
            self.owner_rrh[n] = -1
            self.category[n] = UNALLOC

    def pair(self, n, k2, r2, p1, p2, category, first_account=None, first_removed=(),
             second_account=None, second_removed=()) -> None:
        """Make ``k2`` second user on ``n`` and freeze both powers.

        ``first_account`` replaces the owner's sole account when its power on
        ``n`` was moved away from the waterline; otherwise ``n`` is simply
        dropped from it together with its rate.
        """
        k1 = self.owner[n]
        u1 = self.users[k1]
        if first_account is None:
            first_account = u1.sole.without(n)
        u1.first[n] = p1
        self.set_sole(k1, first_account)
        self.release(first_removed)
        self.second_user[n] = k2
        self.second_rrh[n] = r2
        self.category[n] = category
        self.users[k2].second[n] = p2
        self.set_sole(k2, second_account)
        self.release(second_removed)
