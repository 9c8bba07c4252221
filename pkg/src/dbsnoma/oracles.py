"""Independent reference solvers for tests and acceptance reruns.

Nothing here imports the primary waterfilling or power-adjustment code; the
formulas are transcribed separately so that agreement means something.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLarge


@dataclass(frozen=True)
class OracleReport:
    instance: str
    primary: float
    oracle: float

    @property
    def gap(self) -> float:
        return relative_gap(self.primary, self.oracle)


def relative_gap(a: float, b: float, eps: float = 1e-300) -> float:
    return abs(a - b) / max(abs(a), abs(b), eps)


# -- waterfilling -----------------------------------------------------------

def _rate_at(gains: np.ndarray, w: float) -> float:
    active = gains * w > 1.0
    return float(np.sum(np.log2(gains[active] * w)))


def dichotomy_waterfill(gains, rate_norm: float, rtol: float = 1e-12) -> float:
    """Waterline carrying ``rate_norm`` bits, by bisection on the water level.

    Subcarriers below the probe level get zero power at every probe.
    """
    g = np.asarray(gains, dtype=float)
    if g.size == 0:
        raise ValueError("no subcarriers")
    lo = 1.0 / g.max()
    if rate_norm <= 0:
        return lo
    hi = lo * 2.0
    while _rate_at(g, hi) < rate_norm:
        lo, hi = hi, hi * 2.0
    for _ in range(400):
        mid = math.sqrt(lo * hi)
        rate = _rate_at(g, mid)
        if abs(rate - rate_norm) <= rtol * rate_norm or hi / lo - 1.0 < 1e-16:
            return mid
        if rate < rate_norm:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def waterfill_power(gains, rate_norm: float) -> float:
    """Minimum total power carrying ``rate_norm`` over ``gains`` (bisection)."""
    g = np.asarray(gains, dtype=float)
    if rate_norm <= 0:
        return 0.0
    w = dichotomy_waterfill(g, rate_norm)
    return float(np.sum(np.maximum(w - 1.0 / g, 0.0)))


def rowwise_waterfill_power(gain_rows, rate_norm: float) -> np.ndarray:
    """Minimum power carrying ``rate_norm`` for each row of a gain matrix."""
    g = -np.sort(-np.asarray(gain_rows, dtype=float), axis=1)
    j = np.arange(1, g.shape[1] + 1)
    log_w = (rate_norm - np.cumsum(np.log2(g), axis=1)) / j
    valid = log_w + np.log2(g) > 0.0
    best = g.shape[1] - 1 - np.argmax(valid[:, ::-1], axis=1)
    rows = np.arange(g.shape[0])
    power = j[best] * np.exp2(log_w[rows, best]) - np.cumsum(1.0 / g, axis=1)[rows, best]
    return np.maximum(power, 0.0)


def textbook_waterfill_power(gains, targets) -> np.ndarray:
    """Vectorized minimum power for many rate targets over one gain set.

    Tries every active-set size j over the j best gains and keeps the
    largest j whose weakest member still gets positive power.
    """
    g = np.sort(np.asarray(gains, dtype=float))[::-1]
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    j = np.arange(1, g.size + 1)
    cum_log = np.cumsum(np.log2(g))
    cum_inv = np.cumsum(1.0 / g)
    log_w = (t[:, None] - cum_log[None, :]) / j[None, :]
    valid = log_w + np.log2(g)[None, :] > 0.0
    # valid sets are a prefix of sizes; take the last valid one
    best = np.where(valid.any(axis=1), valid.shape[1] - 1 - np.argmax(valid[:, ::-1], axis=1), 0)
    rows = np.arange(t.size)
    power = j[best] * np.exp2(log_w[rows, best]) - cum_inv[best]
    return np.where(t > 0.0, np.maximum(power, 0.0), 0.0)


# -- grid search -------------------------------------------------------------

@dataclass(frozen=True)
class GridResult:
    argmin: tuple
    value: float
    resolution: tuple
    levels: int


def grid_min_delta_power(objective, bounds, resolution, refine: int = 0,
                         zoom: float = 4.0, refine_resolution=None) -> GridResult:
    """Exhaustive grid minimum of a vectorized objective over a box.

    ``objective`` takes one array per variable (broadcast together) and
    returns values of the same shape; ``bounds`` is a list of ``(lo, hi)``.
    Each refinement level re-grids a box of ``zoom`` cells around the best
    point, clipped to the original bounds, with ``refine_resolution``
    points per axis (default: same as the first level).
    """
    bounds = [tuple(map(float, b)) for b in bounds]
    if isinstance(resolution, int):
        resolution = (resolution,) * len(bounds)
    box = list(bounds)
    best_x, best_v = None, math.inf
    cells = []
    for level in range(refine + 1):
        if level == 1 and refine_resolution is not None:
            resolution = ((refine_resolution,) * len(bounds) if isinstance(refine_resolution, int)
                          else tuple(refine_resolution))
        axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(box, resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        values = np.asarray(objective(*mesh), dtype=float)
        values = np.where(np.isnan(values), np.inf, values)
        idx = np.unravel_index(int(np.argmin(values)), values.shape)
        if values[idx] < best_v:
            best_v = float(values[idx])
            best_x = tuple(float(a[i]) for a, i in zip(axes, idx))
        cells = [(hi - lo) / (n - 1) for (lo, hi), n in zip(box, resolution)]
        box = [(max(b_lo, x - zoom * c), min(b_hi, x + zoom * c))
               for (b_lo, b_hi), x, c in zip(bounds, best_x, cells)]
    return GridResult(best_x, best_v, tuple(cells), refine + 1)


# -- exhaustive OMA allocation -------------------------------------------------

@dataclass(frozen=True)
class ExhaustiveResult:
    total_power: float
    assignment: tuple  # per subcarrier: (user, rrh) or None
    partitions: int
    configurations: int


MAX_USERS, MAX_SUBCARRIERS, MAX_RRHS = 3, 6, 2


def exhaustive_small_alloc(gain: np.ndarray, rate_norm: float) -> ExhaustiveResult:
    """Optimal single-user-per-subcarrier allocation by full enumeration.

    ``gain`` is the K x S x R array of normalized gains h^2 / sigma^2. Every
    split of subcarriers into per-user sets (each user nonempty, leftovers
    unused) and every RRH choice per used subcarrier is considered, with
    optimal waterfilling for each user.
    """
    gain = np.asarray(gain, dtype=float)
    K, S, R = gain.shape
    if K > MAX_USERS or S > MAX_SUBCARRIERS or R > MAX_RRHS:
        raise InstanceTooLarge(
            f"exhaustive search is limited to K<={MAX_USERS}, S<={MAX_SUBCARRIERS}, "
            f"R<={MAX_RRHS}; got K={K}, S={S}, R={R}")

    # best power of user k over subcarrier subset T, minimized over RRH choices
    subset_best = {}
    for k in range(K):
        for size in range(1, S + 1):
            for subset in itertools.combinations(range(S), size):
                choices = list(itertools.product(range(R), repeat=size))
                rows = gain[k, list(subset), :][np.arange(size), np.array(choices)]
                powers = rowwise_waterfill_power(rows.reshape(len(choices), size), rate_norm)
                i = int(np.argmin(powers))
                subset_best[k, subset] = (float(powers[i]), choices[i])

    best_total, best_assign = math.inf, None
    partitions = configurations = 0
    for owners in itertools.product(range(-1, K), repeat=S):
        sets = [tuple(n for n in range(S) if owners[n] == k) for k in range(K)]
        if any(not s for s in sets):
            continue
        partitions += 1
        configurations += R ** sum(len(s) for s in sets)
        total = sum(subset_best[k, sets[k]][0] for k in range(K))
        if total < best_total:
            best_total = total
            assign = [None] * S
            for k in range(K):
                for n, r in zip(sets[k], subset_best[k, sets[k]][1]):
                    assign[n] = (k, r)
            best_assign = tuple(assign)
    return ExhaustiveResult(best_total, best_assign, partitions, configurations)


# -- joint pair adjustment ----------------------------------------------------

def pair_adjust_grid(first_rest_gains, first_rate, shared_gain, second_gains, second_rate,
                     second_gain, ratio_bounds, resolution: int = 400, refine: int = 8,
                     refine_resolution: int | None = 60) -> GridResult:
    """Grid minimum of the pair's total power change over (p1, p2 / p1).

    The first user keeps ``first_rate`` bits over its other subcarriers plus
    the shared one at power p1; the second user adds the shared subcarrier
    (interference-free, gain ``second_gain``) to its sole set. Both sole sets
    are re-waterfilled exactly, with subcarrier removal. The search runs in
    log coordinates over p1 and over the ratio within ``ratio_bounds``.
    Result coordinates are ``(p1, ratio)``.
    """
    rest = np.asarray(first_rest_gains, dtype=float)
    if rest.size == 0:
        raise ValueError("the first user needs another subcarrier for p1 to move")
    second = np.asarray(second_gains, dtype=float)
    p1_max = (2.0 ** first_rate - 1.0) / shared_gain
    base_first = waterfill_power(np.append(rest, shared_gain), first_rate)
    base = base_first + waterfill_power(second, second_rate)

    def total(log_p1, log_ratio):
        p1 = np.exp(log_p1)
        p2 = p1 * np.exp(log_ratio)
        t1 = first_rate - np.log2(1.0 + p1 * shared_gain)
        t2 = second_rate - np.log2(1.0 + p2 * second_gain)
        first = textbook_waterfill_power(rest, np.maximum(t1, 0.0).ravel()).reshape(p1.shape)
        second_power = textbook_waterfill_power(second, np.maximum(t2, 0.0).ravel()).reshape(p1.shape)
        value = first + p1 + second_power + p2 - base
        return np.where((t1 < 0) | (t2 < 0), np.inf, value)

    lo, hi = ratio_bounds
    box = [(math.log(p1_max * 1e-9), math.log(p1_max)), (math.log(lo), math.log(hi))]
    res = grid_min_delta_power(total, box, resolution, refine=refine,
                               refine_resolution=refine_resolution)
    return GridResult((math.exp(res.argmin[0]), math.exp(res.argmin[1])), res.value,
                      res.resolution, res.levels)
