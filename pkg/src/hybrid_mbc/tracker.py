"""
Receiver-side reconstruction and tracking-error statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError
from .geo import EnuTrajectory
from .models import HybridModel, predict, pte
from .scheduler import FULL, RAW, SWITCH, ScheduleConfig, TxLog, effective_rates, \
    run_baseline_transmitter

__all__ = [
    "ReceiverState",
    "PteSeries",
    "run_receiver",
    "percentile",
    "ecdf",
    "match_baseline_rate",
    "TrackingReport",
    "summarize",
    "common_support",
    "PERCENTILES",
]

PERCENTILES = (0.5, 0.9, 0.99)


@dataclass
class ReceiverState:
    last_full: Optional[HybridModel] = None
    last_full_t: Optional[float] = None
    active_override: Optional[str] = None
    last_raw: Optional[object] = None
    last_raw_t: Optional[float] = None

    def apply(self, msg):
        if msg.kind == FULL:
            self.last_full, self.last_full_t = msg.payload, msg.tx_t
            self.active_override = None
        elif msg.kind == SWITCH:
            self.active_override = msg.payload
        elif msg.kind == RAW:
            self.last_raw, self.last_raw_t = msg.payload, msg.tx_t
        else:
            raise ConfigError(f"unknown message kind {msg.kind!r}")

    @property
    def ready(self) -> bool:
        return self.last_full is not None or self.last_raw is not None

    def predict(self, t):
        if self.last_full is not None:
            model = self.last_full
            if self.active_override is not None:
                model = model.with_active(self.active_override)
            return predict(model, t)
        return predict(self.last_raw.as_cv(self.last_raw_t), t)


@dataclass(eq=False)
class PteSeries:
    """Per-instant tracking error; ``applied`` names the message kinds used at each instant."""

    t: np.ndarray
    pte: np.ndarray
    applied: List[str] = field(default_factory=list)

    def __len__(self):
        return len(self.pte)


def run_receiver(delivered: TxLog, truth: EnuTrajectory) -> PteSeries:
    """Predict the sender's position at every grid instant from the delivered messages.

    Messages stamped ``t`` are applied before predicting at ``t``. Instants
    before the first model-bearing message (full update or raw BSM) are
    skipped, since the receiver has nothing to predict with.
    """
    by_step: Dict[int, list] = {}
    for msg in delivered.messages:
        i = truth.index_of(msg.tx_t)
        if not 0 <= i < len(truth) or abs(truth.t[i] - msg.tx_t) > 1e-6:
            raise ConfigError(f"message at t={msg.tx_t} is off the trajectory grid")
        by_step.setdefault(i, []).append(msg)

    state = ReceiverState()
    ts, errs, applied = [], [], []
    for i in range(min(by_step, default=len(truth)), len(truth)):
        msgs = by_step.get(i, ())
        for msg in msgs:
            state.apply(msg)
        if not state.ready:
            continue
        t = truth.t[i]
        ts.append(t)
        errs.append(pte(state.predict(t), (truth.x[i], truth.y[i])))
        applied.append("+".join(m.kind for m in msgs))
    return PteSeries(np.array(ts), np.array(errs), applied)


def percentile(series, p: float) -> float:
    """Nearest-rank percentile: the ``ceil(p * n)``-th smallest value."""
    vals = np.sort(np.asarray(getattr(series, "pte", series), dtype=float))
    if len(vals) == 0:
        raise ConfigError("percentile of an empty series")
    if not 0 < p <= 1:
        raise ConfigError("p must lie in (0, 1]")
    k = max(1, math.ceil(p * len(vals) - 1e-9))
    return float(vals[k - 1])


def ecdf(series):
    """Right-continuous step points ``[(value, fraction <= value), ...]``."""
    vals = np.sort(np.asarray(getattr(series, "pte", series), dtype=float))
    if len(vals) == 0:
        raise ConfigError("ECDF of an empty series")
    uniq, counts = np.unique(vals, return_counts=True)
    frac = np.cumsum(counts) / len(vals)
    return [(float(v), float(f)) for v, f in zip(uniq, frac)]


def match_baseline_rate(truth: EnuTrajectory, target_count: int, cfg: ScheduleConfig,
                        lo: float = 1e-4, hi: float = 1e3, iters: int = 60):
    """Bisect the baseline threshold so its message count approaches ``target_count``.

    Returns ``(threshold, log)`` for the candidate whose count is closest to the
    target; ties go to the smaller threshold.
    """
    if target_count < 1:
        raise ConfigError("target_count must be at least 1")
    seen = {}

    def count(th):
        if th not in seen:
            seen[th] = run_baseline_transmitter(truth, _with_threshold(cfg, th))
        return len(seen[th].messages)

    a, b = math.log(lo), math.log(hi)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        c = count(math.exp(mid))
        if c == target_count:
            break
        if c > target_count:
            a = mid
        else:
            b = mid
    best = min(seen, key=lambda th: (abs(len(seen[th].messages) - target_count), th))
    return best, seen[best]


def _with_threshold(cfg, th):
    return replace(cfg, threshold_m=th)


def common_support(a: PteSeries, b: PteSeries):
    """Restrict two series over the same truth to the instants both of them cover."""
    if len(a) == 0 or len(b) == 0:
        empty = PteSeries(np.array([]), np.array([]), [])
        return empty, empty
    start = max(a.t[0], b.t[0]) - 1e-9

    def cut(s):
        keep = s.t >= start
        return PteSeries(s.t[keep], s.pte[keep], [k for k, f in zip(s.applied, keep) if f])

    return cut(a), cut(b)


def _stats(series: PteSeries) -> dict:
    if len(series) == 0:
        return {f"p{round(p * 100)}": None for p in PERCENTILES}
    return {f"p{round(p * 100)}": percentile(series, p) for p in PERCENTILES}


@dataclass
class TrackingReport:
    rates: dict
    percentiles: dict
    common_percentiles: dict
    ecdf: dict
    matched_baseline: dict

    def to_dict(self) -> dict:
        return {"rates": self.rates, "percentiles": self.percentiles,
                "common_percentiles": self.common_percentiles,
                "ecdf": self.ecdf, "matched_baseline": self.matched_baseline}


def summarize(mbc: PteSeries, base: PteSeries, logs: Dict[str, TxLog], duration: float,
              matched: Optional[dict] = None) -> TrackingReport:
    """Collect rates, nearest-rank percentiles and ECDF tables for both arms.

    ``logs`` maps arm name to its transmitted (not delivered) log.
    ``common_percentiles`` repeats the percentiles over the instants covered by
    both arms, so an arm that lost its first message is not scored over a
    shorter, harder span than the other.
    """
    rates = {arm: effective_rates(log, duration)._asdict() for arm, log in logs.items()}
    series = {"mbc": mbc, "baseline": base}
    cm, cb = common_support(mbc, base)
    return TrackingReport(
        rates=rates,
        percentiles={arm: _stats(s) for arm, s in series.items()},
        common_percentiles={"mbc": _stats(cm), "baseline": _stats(cb)},
        ecdf={arm: ([list(pt) for pt in ecdf(s)] if len(s) else []) for arm, s in series.items()},
        matched_baseline=dict(matched or {}),
    )
