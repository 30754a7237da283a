"""
Threshold x PER experiment runner and artifact writers.

A cell is one ``(threshold, per)`` pair. Transmitter logs depend only on the
threshold, so they are computed once per threshold and reused across PERs;
the channel and the receiver run per cell.
"""

from __future__ import annotations

import csv
import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

from . import __version__
from . import gp as gpr
from .channel import ChannelConfig, delivery_mask, derive_seed
from .errors import ConfigError, TraceError
from .geo import EnuTrajectory, load_trace
from .scheduler import ScheduleConfig, decision_to_row, effective_rates, \
    message_to_row, run_baseline_transmitter, run_mbc_transmitter
from .synth import SCENARIOS, ScenarioSpec, generate, scenario_from_dict, scenario_to_dict
from .tracker import PERCENTILES, match_baseline_rate, percentile, run_receiver, summarize

__all__ = [
    "ExperimentConfig",
    "Cell",
    "ExperimentResult",
    "run_experiment",
    "load_config",
    "write_run_artifacts",
    "write_sweep_artifacts",
    "REPORT_SCHEMA",
    "ARMS",
]

DEFAULT_THRESHOLDS = (0.2, 0.3, 0.4, 0.5)
DEFAULT_PERS = (0.0, 0.4)

# mbc: hybrid model arm; baseline: raw BSMs at the same threshold (rate
# comparison); baseline_matched: raw BSMs at the threshold whose message count
# matches the MBC full-update count (tracking comparison).
ARMS = ("mbc", "baseline", "baseline_matched")

_SCHEDULE_KEYS = ("window", "rate_hz", "noise_var", "kernel_template", "keepalive_s",
                  "optimize", "switch_policy", "bounds")


@dataclass
class ExperimentConfig:
    trace: Optional[str] = None
    scenario: object = "mixed-demo"
    duration_s: Optional[float] = None
    thresholds_m: List[float] = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    pers: List[float] = field(default_factory=lambda: list(DEFAULT_PERS))
    schedule: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if not self.thresholds_m or any(not (th > 0) for th in self.thresholds_m):
            raise ConfigError("thresholds_m must be a non-empty list of positive values")
        if not self.pers or any(not (0.0 <= p <= 1.0) for p in self.pers):
            raise ConfigError("pers must be a non-empty list of values in [0, 1]")
        unknown = set(self.schedule) - set(_SCHEDULE_KEYS)
        if unknown:
            raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
        if int(self.seed) != self.seed:
            raise ConfigError("seed must be an integer")
        self.thresholds_m = [float(v) for v in self.thresholds_m]
        self.pers = [float(v) for v in self.pers]
        self.seed = int(self.seed)
        self.schedule_for(self.thresholds_m[0])

    def schedule_for(self, threshold: float) -> ScheduleConfig:
        kw = dict(self.schedule)
        if "kernel_template" in kw and isinstance(kw["kernel_template"], dict):
            kw["kernel_template"] = gpr.kernel_from_dict(kw["kernel_template"])
        if "bounds" in kw and isinstance(kw["bounds"], dict):
            kw["bounds"] = gpr.Bounds(**{k: tuple(v) for k, v in kw["bounds"].items()})
        return ScheduleConfig(threshold, **kw)

    def scenario_spec(self) -> ScenarioSpec:
        if isinstance(self.scenario, ScenarioSpec):
            return self.scenario
        if isinstance(self.scenario, dict):
            return scenario_from_dict(self.scenario)
        if self.scenario in SCENARIOS:
            return SCENARIOS[self.scenario][0]()
        raise ConfigError(f"unknown scenario {self.scenario!r}")

    def load_truth(self) -> EnuTrajectory:
        rate = self.schedule_for(self.thresholds_m[0]).rate_hz
        if self.trace:
            try:
                return load_trace(self.trace, rate_hz=rate)
            except OSError as exc:
                raise TraceError(f"cannot read trace {self.trace}: {exc}") from None
        spec = self.scenario_spec()
        if spec.rate_hz != rate:
            spec = replace(spec, rate_hz=rate)
        duration = self.duration_s
        if duration is None and isinstance(self.scenario, str):
            duration = SCENARIOS[self.scenario][1]
        return generate(spec, duration, seed=self.seed)

    def resolved(self) -> dict:
        """Fully resolved, JSON-ready echo of the configuration."""
        sched = self.schedule_for(self.thresholds_m[0]).to_dict()
        sched.pop("threshold_m")
        if self.trace:
            source = {"trace": str(self.trace)}
        else:
            duration = self.duration_s
            if duration is None and isinstance(self.scenario, str):
                duration = SCENARIOS[self.scenario][1]
            source = {"scenario": (self.scenario if isinstance(self.scenario, str) else None),
                      "scenario_spec": scenario_to_dict(self.scenario_spec()),
                      "duration_s": duration}
        return {"source": source, "thresholds_m": self.thresholds_m, "pers": self.pers,
                "schedule": sched, "seed": self.seed}


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a JSON config (optional) and apply non-``None`` overrides on top."""
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if data.get("trace"):
        data.setdefault("scenario", None)
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from None


@dataclass
class Cell:
    threshold_m: float
    per: float
    channel_seeds: dict
    sent: dict
    masks: dict
    series: dict
    report: dict


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    truth: EnuTrajectory
    logs: dict  # threshold -> {arm: TxLog}
    matched: dict  # threshold -> matched-baseline info
    cells: List[Cell]

    def report(self) -> dict:
        return {
            "tool": {"name": "hybrid_mbc", "version": __version__},
            "config": self.config.resolved(),
            "seed": self.config.seed,
            "trace": {"samples": len(self.truth), "rate_hz": self.truth.rate_hz,
                      "duration_s": self.truth.duration},
            "cells": [_cell_json(c) for c in self.cells],
        }


def _cell_json(c: Cell) -> dict:
    out = {"threshold_m": c.threshold_m, "per": c.per, "channel_seeds": c.channel_seeds,
           "messages": {arm: {"sent": c.sent[arm], "delivered": int(c.masks[arm].sum())}
                        for arm in ARMS}}
    out.update(c.report)
    return out


def run_experiment(cfg: ExperimentConfig, truth: Optional[EnuTrajectory] = None,
                   fit_cache: Optional[dict] = None) -> ExperimentResult:
    """Run every (threshold, per) cell.

    ``truth`` overrides the trace named by ``cfg``. ``fit_cache`` memoizes
    window fits and may be shared between calls only when they use the same
    trajectory.
    """
    truth = truth if truth is not None else cfg.load_truth()
    duration = truth.duration
    if not duration > 0:
        raise TraceError("trace must span a positive duration")
    cache = {} if fit_cache is None else fit_cache
    logs, matched = {}, {}
    for th in cfg.thresholds_m:
        sc = cfg.schedule_for(th)
        mbc = run_mbc_transmitter(truth, sc, cache)
        base = run_baseline_transmitter(truth, sc)
        n_full = mbc.count("full")
        th_m, base_m = match_baseline_rate(truth, n_full, sc)
        base_m.arm = "baseline_matched"
        logs[th] = {"mbc": mbc, "baseline": base, "baseline_matched": base_m}
        matched[th] = {"threshold_m": th_m, "target_count": n_full,
                       "count": len(base_m.messages)}

    cells = []
    for ti, th in enumerate(cfg.thresholds_m):
        for pi, per in enumerate(cfg.pers):
            seeds = {arm: derive_seed(cfg.seed, ti, pi, arm) for arm in ARMS}
            masks, series = {}, {}
            for arm in ARMS:
                log = logs[th][arm]
                mask = delivery_mask([m.seq for m in log.messages], ChannelConfig(per, seeds[arm]))
                masks[arm] = mask
                series[arm] = run_receiver(log.subset(mask), truth)
            rep = summarize(series["mbc"], series["baseline_matched"], logs[th], duration,
                            matched[th]).to_dict()
            # report the same-threshold baseline's tracking error too
            rep["percentiles"]["baseline_same_threshold"] = summarize(
                series["baseline"], series["baseline"], {}, duration).percentiles["mbc"]
            cells.append(Cell(th, per, seeds, {a: len(logs[th][a].messages) for a in ARMS},
                              masks, series, rep))
    return ExperimentResult(cfg, truth, logs, matched, cells)


# writers ----------------------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _rates_rows(res: ExperimentResult):
    dur = res.truth.duration
    for c in res.cells:
        for arm in ARMS:
            r = effective_rates(res.logs[c.threshold_m][arm], dur)
            yield [_fmt(c.threshold_m), _fmt(c.per), arm, _fmt(r.full_update_hz),
                   _fmt(r.switch_hz), _fmt(r.total_hz)]


def _percentile_rows(res: ExperimentResult):
    rates = {(r[0], r[1], r[2]): r[3:] for r in _rates_rows(res)}
    for c in res.cells:
        for arm in ARMS:
            s = c.series[arm]
            ps = [(_fmt(percentile(s, p)) if len(s) else "") for p in PERCENTILES]
            yield [_fmt(c.threshold_m), _fmt(c.per), arm,
                   *rates[(_fmt(c.threshold_m), _fmt(c.per), arm)], *ps]


def _write_report(res, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(res.report(), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


RATES_HEADER = ["threshold", "per", "arm", "full_hz", "switch_hz", "total_hz"]


def write_run_artifacts(res: ExperimentResult, out_dir) -> None:
    """report.json, pte.csv, messages.csv, decisions.csv and rates.csv."""
    def body(tmp):
        _write_report(res, tmp / "report.json")
        _write_csv(tmp / "rates.csv", RATES_HEADER, _rates_rows(res))
        _write_csv(tmp / "pte.csv", ["t", "pte", "arm", "per", "threshold"], (
            [_fmt(t), _fmt(e), arm, _fmt(c.per), _fmt(c.threshold_m)]
            for c in res.cells for arm in ARMS
            for t, e in zip(c.series[arm].t, c.series[arm].pte)))
        _write_csv(tmp / "messages.csv",
                   ["threshold", "per", "arm", "seq", "t", "kind", "payload", "delivered"], (
            [_fmt(c.threshold_m), _fmt(c.per), arm, *message_to_row(m).values(), int(d)]
            for c in res.cells for arm in ARMS
            for m, d in zip(res.logs[c.threshold_m][arm].messages, c.masks[arm])))
        _write_csv(tmp / "decisions.csv",
                   ["threshold", "arm", "t", "pte_cv", "pte_gp", "pte_min", "action"], (
            [_fmt(th), arm, *decision_to_row(d).values()]
            for th, arms in res.logs.items() for arm in ARMS for d in arms[arm].decisions))
    _atomic_dir(out_dir, body)


def write_sweep_artifacts(res: ExperimentResult, out_dir) -> None:
    """report.json, rates.csv and pte_percentiles.csv."""
    def body(tmp):
        _write_report(res, tmp / "report.json")
        _write_csv(tmp / "rates.csv", RATES_HEADER, _rates_rows(res))
        _write_csv(tmp / "pte_percentiles.csv", RATES_HEADER + ["p50", "p90", "p99"],
                   _percentile_rows(res))
    _atomic_dir(out_dir, body)


def _atomic_dir(out_dir, body):
    """Write everything into a scratch directory, then move files into place."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    try:
        body(tmp)
        for f in sorted(tmp.iterdir()):
            os.replace(f, out / f.name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


_PCT = {"type": "object", "required": ["p50", "p90", "p99"],
        "properties": {k: {"type": ["number", "null"], "minimum": 0}
                       for k in ("p50", "p90", "p99")}}
_RATE = {"type": "object", "required": ["full_update_hz", "switch_hz", "total_hz"],
         "properties": {k: {"type": "number", "minimum": 0}
                        for k in ("full_update_hz", "switch_hz", "total_hz")}}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["tool", "config", "seed", "trace", "cells"],
    "properties": {
        "tool": {"type": "object", "required": ["name", "version"]},
        "config": {"type": "object",
                   "required": ["source", "thresholds_m", "pers", "schedule", "seed"]},
        "seed": {"type": "integer"},
        "trace": {"type": "object", "required": ["samples", "rate_hz", "duration_s"]},
        "cells": {"type": "array", "items": {
            "type": "object",
            "required": ["threshold_m", "per", "channel_seeds", "messages", "rates",
                         "percentiles", "common_percentiles", "ecdf", "matched_baseline"],
            "properties": {
                "threshold_m": {"type": "number", "exclusiveMinimum": 0},
                "per": {"type": "number", "minimum": 0, "maximum": 1},
                "rates": {"type": "object", "required": list(ARMS),
                          "additionalProperties": _RATE},
                "percentiles": {"type": "object", "required": ["mbc", "baseline"],
                                "additionalProperties": _PCT},
                "common_percentiles": {"type": "object", "required": ["mbc", "baseline"],
                                       "additionalProperties": _PCT},
                "ecdf": {"type": "object", "required": ["mbc", "baseline"],
                         "additionalProperties": {"type": "array", "items": {
                             "type": "array", "minItems": 2, "maxItems": 2,
                             "items": {"type": "number"}}}},
                "matched_baseline": {"type": "object",
                                     "required": ["threshold_m", "target_count", "count"]},
            }}},
    },
}
