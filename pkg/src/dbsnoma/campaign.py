"""Monte Carlo campaigns: run methods over seeded trials and tabulate results."""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .allocators import Method, oma_assign, run_method, worst_best_h_init
from .channel import trial_channel
from .errors import ConfigError
from .oracles import exhaustive_small_alloc
from .params import SystemParams, params_from_dict, params_to_dict

log = logging.getLogger(__name__)

SWEEP_AXES = ("rate_req", "num_users", "num_rrh", "num_subcarriers")

CSV_COLUMNS = (
    "method", "sweep_axis", "sweep_value", "trial", "seed", "total_power_mW",
    "n_nonmux", "n_mutsic", "n_singsic_srrh", "n_singsic_drrh", "n_unalloc",
    "audit_ok", "wall_ms",
)

_COUNT_KEYS = {
    "n_nonmux": "non-mux",
    "n_mutsic": "mutual-SIC",
    "n_singsic_srrh": "single-SIC-SRRH",
    "n_singsic_drrh": "single-SIC-DRRH",
    "n_unalloc": "unallocated",
}


@dataclass(frozen=True)
class CampaignConfig:
    params: SystemParams
    methods: tuple
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    trials: int | None = None

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("methods", "method list is empty")
        for m in self.methods:
            Method(m)
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ConfigError("sweep.axis", f"must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
            if not self.sweep_values or any(not v > 0 for v in self.sweep_values):
                raise ConfigError("sweep.values", "sweep values must be a nonempty list of positive numbers")

    @property
    def num_trials(self) -> int:
        return self.trials if self.trials is not None else self.params.trials

    def points(self) -> list[tuple[str, float, SystemParams]]:
        """(axis, value, params) for every sweep point."""
        if self.sweep_axis is None:
            return [("none", 0, self.params)]
        out = []
        for v in self.sweep_values:
            cast = float(v) if self.sweep_axis == "rate_req" else int(v)
            out.append((self.sweep_axis, cast, self.params.replace(**{self.sweep_axis: cast})))
        return out


def config_from_dict(raw: dict) -> CampaignConfig:
    """Parse ``{"params": {...}, "methods": [...], "sweep": {"axis", "values"}, "trials"}``."""
    unknown = sorted(set(raw) - {"params", "methods", "sweep", "trials"})
    if unknown:
        raise ConfigError(unknown[0], f"unknown campaign key(s): {', '.join(unknown)}")
    params = params_from_dict(raw.get("params", {}))
    methods = tuple(raw.get("methods", [m.value for m in Method]))
    try:
        methods = tuple(Method(m).value for m in methods)
    except ValueError as exc:
        raise ConfigError("methods", str(exc)) from None
    sweep = raw.get("sweep") or {}
    extra = sorted(set(sweep) - {"axis", "values"})
    if extra:
        raise ConfigError(f"sweep.{extra[0]}", "unknown sweep key")
    return CampaignConfig(params, methods, sweep.get("axis"), tuple(sweep.get("values", ())),
                          raw.get("trials"))


def load_config(path) -> CampaignConfig:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "campaign configuration must be a JSON object")
    return config_from_dict(raw)


def _run_trial(task):
    """All methods on one shared channel realization; returns CSV rows."""
    axis, value, params_dict, methods, trial, timing = task
    params = SystemParams(**params_dict)
    channel = trial_channel(params, trial)
    rows = []
    for name in methods:
        start = time.perf_counter()
        row = {"method": name, "sweep_axis": axis, "sweep_value": value,
               "trial": trial, "seed": params.seed}
        try:
            state = run_method(name, channel, params)
        except Exception as exc:  # noqa: BLE001 - a failing trial must not stop the campaign
            log.error("method %s failed on trial %d (%s=%s): %r", name, trial, axis, value, exc)
            row.update(total_power_mW=math.nan, audit_ok=False, error=repr(exc),
                       **{col: 0 for col in _COUNT_KEYS})
            row["n_unalloc"] = params.num_subcarriers
        else:
            counts = state.report.categories
            row.update(total_power_mW=state.total_power(), audit_ok=state.report.ok,
                       iterations=state.iterations, root_solves=state.root_solves,
                       **{col: counts[key] for col, key in _COUNT_KEYS.items()})
        elapsed = (time.perf_counter() - start) * 1e3
        row["wall_ms"] = round(elapsed, 3) if timing else 0
        rows.append(row)
    return rows


def _sort_key(row):
    return (row["sweep_axis"], row["sweep_value"], row["trial"], row["method"])


def run_campaign(config: CampaignConfig, workers: int = 1, timing: bool = False,
                 progress=None) -> list[dict]:
    """Run every (sweep point, trial) and return rows sorted deterministically.

    ``wall_ms`` is recorded only when ``timing`` is set so that the output
    stays byte-identical across runs and worker counts.
    """
    tasks = []
    for axis, value, params in config.points():
        pdict = params_to_dict(params)
        tasks.extend((axis, value, pdict, config.methods, t, timing) for t in range(config.num_trials))
    rows = []
    if workers <= 1:
        results = map(_run_trial, tasks)
        for i, chunk in enumerate(results, 1):
            rows.extend(chunk)
            if progress:
                progress(i, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, chunk in enumerate(pool.map(_run_trial, tasks, chunksize=4), 1):
                rows.extend(chunk)
                if progress:
                    progress(i, len(tasks))
    rows.sort(key=_sort_key)
    return rows


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])


def read_csv(path) -> list[dict]:
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row = dict(raw)
            row["sweep_value"] = float(raw["sweep_value"])
            row["trial"] = int(raw["trial"])
            row["seed"] = int(raw["seed"])
            row["total_power_mW"] = float(raw["total_power_mW"])
            for col in _COUNT_KEYS:
                row[col] = int(raw[col])
            row["audit_ok"] = raw["audit_ok"] in ("1", "True", "true")
            row["wall_ms"] = float(raw["wall_ms"])
            rows.append(row)
    return rows


@dataclass
class SummaryRow:
    method: str
    sweep_axis: str
    sweep_value: float
    trials: int
    audited: int
    mean_power_w: float
    std_power_w: float
    category_means: dict = field(default_factory=dict)
    noma_fraction: float = 0.0


def summarize(rows, num_subcarriers: int | None = None) -> list[SummaryRow]:
    """Per (method, sweep point) power statistics and category means.

    Trials whose audit failed count toward the category means but not the
    power statistics.
    """
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["sweep_axis"], float(row["sweep_value"]), row["method"]), []).append(row)
    out = []
    for (axis, value, method), group in sorted(groups.items()):
        powers = [r["total_power_mW"] / 1e3 for r in group if r["audit_ok"]]
        means = {col: statistics.fmean(r[col] for r in group) for col in _COUNT_KEYS}
        S = num_subcarriers
        if S is None:
            S = sum(group[0][col] for col in _COUNT_KEYS)
        out.append(SummaryRow(
            method=method, sweep_axis=axis, sweep_value=value, trials=len(group),
            audited=len(powers),
            mean_power_w=statistics.fmean(powers) if powers else math.nan,
            std_power_w=statistics.stdev(powers) if len(powers) > 1 else 0.0,
            category_means=means,
            noma_fraction=(S - means["n_nonmux"] - means["n_unalloc"]) / S,
        ))
    return out


def format_summary(summary: list[SummaryRow]) -> str:
    header = (f"{'method':28s} {'axis':>10s} {'value':>12s} {'trials':>6s} "
              f"{'mean W':>10s} {'std W':>10s} {'nonmux':>7s} {'mutsic':>7s} "
              f"{'ss-srrh':>7s} {'ss-drrh':>7s} {'unalloc':>7s} {'noma%':>6s}")
    lines = [header, "-" * len(header)]
    excluded = 0
    for s in summary:
        c = s.category_means
        excluded += s.trials - s.audited
        lines.append(
            f"{s.method:28s} {s.sweep_axis:>10s} {s.sweep_value:>12g} {s.trials:>6d} "
            f"{s.mean_power_w:>10.4f} {s.std_power_w:>10.4f} {c['n_nonmux']:>7.3f} "
            f"{c['n_mutsic']:>7.3f} {c['n_singsic_srrh']:>7.3f} {c['n_singsic_drrh']:>7.3f} "
            f"{c['n_unalloc']:>7.3f} {100 * s.noma_fraction:>6.2f}")
    if excluded:
        lines.append(f"* {excluded} trial(s) failed the audit and are excluded from power statistics")
    return "\n".join(lines)


def greedy_gap_study(params: SystemParams, instances: int) -> np.ndarray:
    """Relative excess power of greedy OMA over exhaustive search, per trial."""
    gaps = np.empty(instances)
    for trial in range(instances):
        state = oma_assign(worst_best_h_init(trial_channel(params, trial), params), params)
        best = exhaustive_small_alloc(state.gain, params.rate_norm)
        gaps[trial] = state.total_power() / best.total_power - 1.0
    return gaps


def gap_report(gaps: np.ndarray) -> dict:
    return {
        "instances": int(gaps.size),
        "greedy_below_optimum": int(np.sum(gaps < -1e-9)),
        "exact_optimum_fraction": float(np.mean(gaps <= 1e-9)),
        "mean_gap": float(gaps.mean()),
        "median_gap": float(np.median(gaps)),
        "quantiles": {str(q): float(np.quantile(gaps, q)) for q in (0.5, 0.9, 0.95, 0.99)},
        "max_gap": float(gaps.max()),
    }
