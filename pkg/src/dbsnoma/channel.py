"""Cell geometry and the K x S x R channel gain tensor.

Every random draw comes from a ``numpy.random.SeedSequence`` whose spawn key
encodes (trial, stream, user[, rrh]), so a trial can be regenerated on its own
and trials can be produced in any order or process.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import SystemParams

_USER_STREAM = 0
_LINK_STREAM = 1

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class FadingProfile:
    """Tapped delay line with an exponential power delay profile."""

    tap_delays: np.ndarray
    tap_powers: np.ndarray

    @property
    def num_taps(self) -> int:
        return len(self.tap_powers)

    @property
    def mean_delay(self) -> float:
        return float(np.dot(self.tap_powers, self.tap_delays))

    @property
    def rms_delay_spread(self) -> float:
        mean = self.mean_delay
        return float(np.sqrt(np.dot(self.tap_powers, (self.tap_delays - mean) ** 2)))

    def frequency_correlation(self, delta_f):
        """E[F(f) F*(f + delta_f)] for unit-power taps."""
        delta_f = np.asarray(delta_f, dtype=float)
        phase = np.exp(2j * np.pi * np.multiply.outer(delta_f, self.tap_delays))
        return phase @ self.tap_powers


def exponential_profile(rms_delay_spread: float, num_taps: int = 8,
                        taps_per_decay: float = 2.0) -> FadingProfile:
    """Equally spaced taps with powers exp(-i / taps_per_decay).

    The spacing is solved so that the rms delay spread equals the target.
    A zero target yields the flat single-tap profile.
    """
    if rms_delay_spread == 0 or num_taps == 1:
        return FadingProfile(np.zeros(1), np.ones(1))
    idx = np.arange(num_taps, dtype=float)
    powers = np.exp(-idx / taps_per_decay)
    powers /= powers.sum()
    mean_idx = np.dot(powers, idx)
    rms_idx = math.sqrt(np.dot(powers, (idx - mean_idx) ** 2))
    spacing = rms_delay_spread / rms_idx
    return FadingProfile(idx * spacing, powers)


@dataclass(frozen=True)
class UserGeometry:
    users: np.ndarray  # (K, 2) metres
    rrhs: np.ndarray  # (R, 2) metres

    def distances(self) -> np.ndarray:
        """(K, R) user-to-RRH distances."""
        diff = self.users[:, None, :] - self.rrhs[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class ChannelTensor:
    """Amplitude gains h[k, n, r] and the per-subcarrier noise power (mW)."""

    gains: np.ndarray
    noise_power: float

    def __post_init__(self):
        g = self.gains
        if g.ndim != 3:
            raise ValueError(f"channel tensor must be 3-D, got shape {g.shape}")
        if not (np.all(np.isfinite(g)) and np.all(g > 0)):
            raise ValueError("channel gains must be finite and strictly positive")

    @property
    def shape(self):
        return self.gains.shape

    @property
    def snr_gain(self) -> np.ndarray:
        """h^2 / sigma^2 in 1/mW, the quantity every allocator works with."""
        return self.gains ** 2 / self.noise_power

    def center_only(self) -> "ChannelTensor":
        """View restricted to RRH 0, the centralized-antenna case."""
        return ChannelTensor(self.gains[:, :, :1].copy(), self.noise_power)


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def place_rrhs(params: SystemParams) -> np.ndarray:
    radius = params.rrh_ring_fraction * params.cell_radius
    pos = np.zeros((params.num_rrh, 2))
    ring = params.num_rrh - 1
    for i in range(ring):
        angle = 2.0 * math.pi * i / ring
        pos[i + 1] = radius * math.cos(angle), radius * math.sin(angle)
    return pos


def in_hexagon(xy, radius: float) -> np.ndarray:
    """Containment in the flat-topped hexagon of circumradius ``radius``."""
    xy = np.asarray(xy, dtype=float)
    x = np.abs(xy[..., 0])
    y = np.abs(xy[..., 1])
    return (y <= SQRT3 / 2 * radius) & (SQRT3 * x + y <= SQRT3 * radius)


def _sample_hexagon(rng: np.random.Generator, radius: float) -> np.ndarray:
    half_h = SQRT3 / 2 * radius
    while True:
        pt = np.array([rng.uniform(-radius, radius), rng.uniform(-half_h, half_h)])
        if in_hexagon(pt, radius):
            return pt


def place_users(params: SystemParams, trial: int = 0) -> np.ndarray:
    """K points uniform over the hexagonal cell, one substream per user."""
    pts = [
        _sample_hexagon(substream(params.seed, trial, _USER_STREAM, k), params.cell_radius)
        for k in range(params.num_users)
    ]
    return np.array(pts).reshape(params.num_users, 2)


def make_geometry(params: SystemParams, trial: int = 0) -> UserGeometry:
    return UserGeometry(place_users(params, trial), place_rrhs(params))


def path_gain(distance, params: SystemParams) -> np.ndarray:
    d = np.maximum(np.asarray(distance, dtype=float), params.min_distance_clamp)
    loss_db = params.pathloss_ref_db + 10.0 * params.pathloss_exponent * np.log10(d / params.cell_radius)
    return 10.0 ** (-loss_db / 10.0)


def realize_channel(params: SystemParams, geometry: UserGeometry, trial: int = 0, *,
                    profile: FadingProfile | None = None, fading: bool = True,
                    shadowing: bool = True) -> ChannelTensor:
    """Draw the channel tensor of one trial.

    h^2 = path gain x lognormal shadowing x |F(n)|^2, with F the S-point
    frequency response of the tapped delay line; each (user, RRH) link has
    its own substream.
    """
    K, S = params.num_users, params.num_subcarriers
    R = len(geometry.rrhs)
    if profile is None:
        profile = exponential_profile(params.rms_delay_spread)
    freqs = np.arange(S) * params.subcarrier_bandwidth
    steering = np.exp(-2j * np.pi * np.multiply.outer(freqs, profile.tap_delays))  # (S, taps)
    amp = np.sqrt(profile.tap_powers / 2.0)

    pl = path_gain(geometry.distances(), params)
    gain2 = np.empty((K, S, R))
    for k in range(K):
        for r in range(R):
            rng = substream(params.seed, trial, _LINK_STREAM, k, r)
            shadow_db = rng.standard_normal() * params.shadowing_sigma
            taps = amp * (rng.standard_normal(profile.num_taps)
                          + 1j * rng.standard_normal(profile.num_taps))
            fade = np.abs(steering @ taps) ** 2 if fading else np.ones(S)
            sh = 10.0 ** (shadow_db / 10.0) if shadowing else 1.0
            gain2[k, :, r] = pl[k, r] * sh * fade
    # a deep fade can underflow to exactly zero; keep the tensor strictly positive
    gain2 = np.maximum(gain2, np.finfo(float).tiny)
    return ChannelTensor(np.sqrt(gain2), params.noise_power)


def trial_channel(params: SystemParams, trial: int = 0) -> ChannelTensor:
    return realize_channel(params, make_geometry(params, trial), trial)


def dump_channel(channel: ChannelTensor, path, *, seed: int, trial: int = 0) -> None:
    """Write the tensor to ``.npz`` (binary) or ``.csv`` for replay."""
    path = Path(path)
    K, S, R = channel.shape
    if path.suffix == ".npz":
        np.savez(path, gains=channel.gains, noise_power=channel.noise_power,
                 K=K, S=S, R=R, seed=seed, trial=trial)
        return
    with path.open("w", newline="") as fh:
        fh.write(f"# K={K} S={S} R={R} seed={seed} trial={trial} noise_power={channel.noise_power!r}\n")
        w = csv.writer(fh)
        w.writerow(["k", "n", "r", "h"])
        for k in range(K):
            for n in range(S):
                for r in range(R):
                    w.writerow([k, n, r, repr(float(channel.gains[k, n, r]))])


def load_channel(path) -> tuple[ChannelTensor, dict]:
    """Inverse of :func:`dump_channel`; returns the tensor and its header."""
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            header = {key: int(z[key]) for key in ("K", "S", "R", "seed", "trial")}
            return ChannelTensor(z["gains"].copy(), float(z["noise_power"])), header
    with path.open() as fh:
        first = fh.readline().lstrip("#").split()
        header = {}
        for item in first:
            key, value = item.split("=")
            header[key] = float(value) if key == "noise_power" else int(value)
        rows = list(csv.DictReader(fh))
    gains = np.empty((header["K"], header["S"], header["R"]))
    for row in rows:
        gains[int(row["k"]), int(row["n"]), int(row["r"])] = float(row["h"])
    noise = header.pop("noise_power")
    return ChannelTensor(gains, noise), header
