"""System parameters and configuration loading."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    ConfigError,
    NegativeMargin,
    NonPositiveBandwidth,
    TooFewSubcarriers,
    UnknownConfigKey,
)

# LTE macro path loss 128.1 + 37.6 log10(d / 1 km), evaluated at the default 500 m edge.
DEFAULT_PATHLOSS_REF_DB = 128.1 + 37.6 * math.log10(0.5)


@dataclass(frozen=True)
class SystemParams:
    """Scalar knobs of one simulated cell.

    Units: bandwidth in Hz, noise_psd in mW/Hz, rate_req in bit/s,
    power_threshold in W, distances in m, shadowing_sigma in dB and
    rms_delay_spread in s. ``pathloss_ref_db`` is the loss at the cell edge;
    set it to 0 to normalize the edge gain to one.
    """

    num_users: int = 15
    num_subcarriers: int = 64
    num_rrh: int = 4
    bandwidth: float = 10e6
    noise_psd: float = 4e-18
    rate_req: float = 12e6
    ftpa_alpha: float = 0.5
    power_threshold: float = 0.01
    safety_margin: float = 0.01
    cell_radius: float = 500.0
    rrh_ring_fraction: float = 2.0 / 3.0
    pathloss_exponent: float = 3.76
    pathloss_ref_db: float = DEFAULT_PATHLOSS_REF_DB
    shadowing_sigma: float = 8.0
    rms_delay_spread: float = 500e-9
    min_distance_clamp: float = 10.0
    trials: int = 500
    seed: int = 0

    @property
    def noise_power(self) -> float:
        """Per-subcarrier noise power in mW."""
        return self.noise_psd * self.bandwidth / self.num_subcarriers

    @property
    def subcarrier_bandwidth(self) -> float:
        return self.bandwidth / self.num_subcarriers

    @property
    def rate_norm(self) -> float:
        """Required rate in bits per channel use summed over subcarriers."""
        return self.rate_req * self.num_subcarriers / self.bandwidth

    @property
    def threshold_mw(self) -> float:
        return self.power_threshold * 1e3

    def replace(self, **changes) -> "SystemParams":
        return validate_config(dataclasses.replace(self, **changes))


def validate_config(params: SystemParams) -> SystemParams:
    """Check every invariant of ``params`` and return it unchanged."""
    p = params
    if not isinstance(p.num_users, int) or p.num_users < 1:
        raise ConfigError("num_users", f"must be a positive integer, got {p.num_users!r}")
    if not isinstance(p.num_rrh, int) or p.num_rrh < 1:
        raise ConfigError("num_rrh", f"must be a positive integer, got {p.num_rrh!r}")
    if not isinstance(p.num_subcarriers, int) or p.num_subcarriers < p.num_users:
        raise TooFewSubcarriers(
            "num_subcarriers",
            f"S={p.num_subcarriers} is smaller than K={p.num_users}",
        )
    if not p.bandwidth > 0:
        raise NonPositiveBandwidth("bandwidth", f"must be > 0, got {p.bandwidth}")
    if not p.noise_psd > 0:
        raise ConfigError("noise_psd", f"must be > 0, got {p.noise_psd}")
    if not p.rate_req > 0:
        raise ConfigError("rate_req", f"must be > 0, got {p.rate_req}")
    if not 0.0 <= p.ftpa_alpha <= 1.0:
        raise ConfigError("ftpa_alpha", f"must lie in [0, 1], got {p.ftpa_alpha}")
    if not p.power_threshold >= 0:
        raise ConfigError("power_threshold", f"must be >= 0, got {p.power_threshold}")
    if not p.safety_margin >= 0:
        raise NegativeMargin("safety_margin", f"must be >= 0, got {p.safety_margin}")
    if not p.cell_radius > 0:
        raise ConfigError("cell_radius", f"must be > 0, got {p.cell_radius}")
    if not 0.0 <= p.rrh_ring_fraction <= 1.0:
        raise ConfigError("rrh_ring_fraction", f"must lie in [0, 1], got {p.rrh_ring_fraction}")
    if not p.pathloss_exponent >= 0:
        raise ConfigError("pathloss_exponent", f"must be >= 0, got {p.pathloss_exponent}")
    if not math.isfinite(p.pathloss_ref_db):
        raise ConfigError("pathloss_ref_db", "must be finite")
    if not p.shadowing_sigma >= 0:
        raise ConfigError("shadowing_sigma", f"must be >= 0, got {p.shadowing_sigma}")
    if not p.rms_delay_spread >= 0:
        raise ConfigError("rms_delay_spread", f"must be >= 0, got {p.rms_delay_spread}")
    if not p.min_distance_clamp > 0:
        raise ConfigError("min_distance_clamp", f"must be > 0, got {p.min_distance_clamp}")
    if not isinstance(p.trials, int) or p.trials < 1:
        raise ConfigError("trials", f"must be a positive integer, got {p.trials!r}")
    if not isinstance(p.seed, int) or p.seed < 0:
        raise ConfigError("seed", f"must be a nonnegative integer, got {p.seed!r}")
    return params


_FIELDS = {f.name: f for f in dataclasses.fields(SystemParams)}


def params_from_dict(raw: dict) -> SystemParams:
    """Build validated params from a mapping with the exact field names."""
    unknown = sorted(set(raw) - set(_FIELDS))
    if unknown:
        raise UnknownConfigKey(unknown[0], f"unknown configuration key(s): {', '.join(unknown)}")
    values = {}
    for key, value in raw.items():
        if _FIELDS[key].type == "int":
            if isinstance(value, float) and value.is_integer():
                value = int(value)
        elif isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        values[key] = value
    return validate_config(SystemParams(**values))


def params_to_dict(params: SystemParams) -> dict:
    return dataclasses.asdict(params)


def load_params(path) -> SystemParams:
    """Read a JSON object of system parameters from ``path``."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    return params_from_dict(raw)
