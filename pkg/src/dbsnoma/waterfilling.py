"""Closed-form recursive waterfilling.

All quantities are normalized: a gain is h^2 / sigma^2 (1/mW), a waterline
and a power are in mW, and a rate is in bits per channel use (the physical
rate times S / B). With these units the power on a subcarrier of gain g is
``w - 1/g`` and its rate is ``log2(w * g)``.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass

import numpy as np

from .errors import AllRemoved, EmptySet


@dataclass(frozen=True)
class WaterfillAccount:
    """Waterline of one user over its sole subcarriers.

    ``gains`` is sorted in decreasing order and ``ids`` follows the same
    order. An empty account has waterline 0.
    """

    waterline: float
    gains: tuple = ()
    ids: tuple = ()

    @property
    def size(self) -> int:
        return len(self.gains)

    @property
    def weakest_gain(self) -> float:
        return self.gains[-1]

    def rate(self) -> float:
        if not self.gains:
            return 0.0
        return self.size * math.log2(self.waterline) + sum(math.log2(g) for g in self.gains)

    def total_power(self) -> float:
        return self.size * self.waterline - sum(1.0 / g for g in self.gains)

    def power_of(self, sub_id) -> float:
        return self.waterline - 1.0 / self.gains[self.ids.index(sub_id)]

    def gain_of(self, sub_id) -> float:
        return self.gains[self.ids.index(sub_id)]

    def with_added(self, gain: float, sub_id, waterline: float) -> "WaterfillAccount":
        pairs = list(zip((-g for g in self.gains), self.ids))
        insort(pairs, (-gain, sub_id))
        return WaterfillAccount(waterline, tuple(-g for g, _ in pairs), tuple(i for _, i in pairs))

    def without(self, sub_id) -> "WaterfillAccount":
        """Drop one subcarrier together with its rate; the waterline stays put."""
        i = self.ids.index(sub_id)
        gains = self.gains[:i] + self.gains[i + 1:]
        ids = self.ids[:i] + self.ids[i + 1:]
        return WaterfillAccount(self.waterline if gains else 0.0, gains, ids)


def make_account(gains, ids, rate_norm: float) -> WaterfillAccount:
    order = sorted(range(len(gains)), key=lambda i: (-gains[i], i))
    g = tuple(float(gains[i]) for i in order)
    return WaterfillAccount(waterline_from_rate(g, rate_norm), g, tuple(ids[i] for i in order))


def waterline_from_rate(gains, rate_norm: float) -> float:
    """Waterline giving sum(log2(w * g)) == rate_norm, in the log domain."""
    if len(gains) == 0:
        raise EmptySet("waterline of an empty subcarrier set")
    n = len(gains)
    log2_w = (rate_norm - sum(math.log2(g) for g in gains)) / n
    return 2.0 ** log2_w


def admit_check(waterline: float, gain: float) -> bool:
    """True iff adding ``gain`` lowers the waterline (and the total power)."""
    return gain * waterline > 1.0


def add_subcarrier(waterline: float, size: int, gain: float) -> tuple[float, float]:
    """New waterline and power change after adding a subcarrier at constant rate."""
    new_w = math.exp((size * math.log(waterline) - math.log(gain)) / (size + 1))
    delta = (size + 1) * new_w - size * waterline - 1.0 / gain
    return new_w, delta


def rescale_waterline_for_rate_delta(waterline: float, size: int, delta_rate: float) -> float:
    return 2.0 ** (delta_rate / size) * waterline


def pairing_power_delta(waterline: float, size: int, new_waterline: float, pair_power: float) -> float:
    return size * (new_waterline - waterline) + pair_power


def batch_remove_negative(account: WaterfillAccount, new_waterline: float,
                          pair_power: float = 0.0):
    """Drop every subcarrier left with nonpositive power under ``new_waterline``.

    The weakest subcarriers go first and all at once; the sole-set rate target
    implied by ``new_waterline`` is preserved. Returns ``(account, removed
    ids, delta_power)`` where the power change is measured against
    ``account``. Raises :class:`AllRemoved` when nothing survives.
    """
    gains, ids = account.gains, account.ids
    n0 = len(gains)
    keep = n0
    log_w = math.log(new_waterline)
    n = n0
    while keep > 0 and gains[keep - 1] * math.exp(log_w) <= 1.0:
        cut = keep
        while cut > 0 and gains[cut - 1] * math.exp(log_w) <= 1.0:
            cut -= 1
        if cut == 0:
            raise AllRemoved("no sole subcarrier survives the waterline decrease")
        removed_log = sum(math.log(g) for g in gains[cut:keep])
        log_w = (n * log_w + removed_log) / cut
        n = cut
        keep = cut
    if keep == 0:
        raise AllRemoved("empty sole set")
    w = math.exp(log_w)
    removed = ids[keep:]
    removed_inv = sum(1.0 / g for g in gains[keep:])
    delta = keep * w - n0 * account.waterline + removed_inv + pair_power
    return WaterfillAccount(w, gains[:keep], ids[:keep]), removed, delta


def apply_rate_change(account: WaterfillAccount, delta_rate: float, pair_power: float = 0.0):
    """Re-waterfill the sole set after its rate target moves by ``delta_rate``.

    Dispatches to the plain rescale when no subcarrier goes negative and to
    batch removal otherwise. Returns ``(account, removed ids, delta_power)``.
    """
    n = account.size
    w_new = rescale_waterline_for_rate_delta(account.waterline, n, delta_rate)
    if account.weakest_gain * w_new > 1.0:
        delta = pairing_power_delta(account.waterline, n, w_new, pair_power)
        return WaterfillAccount(w_new, account.gains, account.ids), (), delta
    return batch_remove_negative(account, w_new, pair_power)


def insert_subcarrier(account: WaterfillAccount, gain: float, sub_id):
    """Waterfill ``gain`` into the sole set at constant rate.

    Unlike :func:`add_subcarrier` the new gain need not be the weakest, so
    existing subcarriers pushed below zero power are dropped. Returns
    ``(account, removed ids, delta_power)``.
    """
    new_w, _ = add_subcarrier(account.waterline, account.size, gain)
    grown = account.with_added(gain, sub_id, new_w)
    count = 0
    while grown.gains[grown.size - 1 - count] * new_w <= 1.0:
        count += 1
        keep = grown.size - count
        log_w = (grown.size * math.log(grown.waterline)
                 + sum(math.log(g) for g in grown.gains[keep:])) / keep
        new_w = math.exp(log_w)
    new_acc, removed = release_weakest(grown, count)
    return new_acc, removed, new_acc.total_power() - account.total_power()


def release_weakest(account: WaterfillAccount, count: int):
    """Drop the ``count`` weakest subcarriers, keeping the account's rate."""
    if count <= 0:
        return account, ()
    keep = account.size - count
    if keep <= 0:
        raise AllRemoved("cannot release every sole subcarrier")
    log_w = (account.size * math.log(account.waterline)
             + sum(math.log(g) for g in account.gains[keep:])) / keep
    return (WaterfillAccount(math.exp(log_w), account.gains[:keep], account.ids[:keep]),
            account.ids[keep:])


def powers_from_waterline(account: WaterfillAccount) -> np.ndarray:
    return account.waterline - 1.0 / np.asarray(account.gains, dtype=float)
