"""
Transmitter-side error-driven scheduling.

The MBC transmitter holds the last hybrid model it sent and scores both of its
sub-models against every new GPS sample. It sends a cheap sub-model switch when
the better sub-model changes and a full retrained model once neither sub-model
stays under the error threshold. The baseline transmitter applies the same
error rule to raw position/velocity messages coasted at constant velocity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, List, NamedTuple, Optional

from . import gp as gpr
from .errors import ConfigError, TraceError
from .geo import EnuTrajectory
from .models import CV, CvModel, fit_hybrid, model_from_dict, model_to_dict, \
    predict, pte, select_sub_model

__all__ = [
    "ScheduleConfig",
    "RawBsm",
    "ModelMessage",
    "Decision",
    "TxLog",
    "FULL",
    "SWITCH",
    "RAW",
    "run_mbc_transmitter",
    "run_baseline_transmitter",
    "effective_rates",
    "Rates",
    "message_to_row",
    "message_from_row",
    "decision_to_row",
]

FULL = "full"
SWITCH = "switch"
RAW = "raw"

# decision actions
HOLD = "hold"
KEEPALIVE = "keepalive"

# "argmin": switch whenever the better sub-model changes.
# "on_violation": switch only once the active sub-model reaches the threshold.
SWITCH_POLICIES = ("argmin", "on_violation")


@dataclass(frozen=True)
class ScheduleConfig:
    threshold_m: float
    window: int = 10
    rate_hz: float = 10.0
    noise_var: float = gpr.DEFAULT_NOISE_VAR
    kernel_template: gpr.KernelSpec = gpr.DEFAULT_KERNEL
    keepalive_s: Optional[float] = None
    optimize: bool = True
    bounds: gpr.Bounds = gpr.Bounds()
    switch_policy: str = "argmin"

    def __post_init__(self):
        if self.switch_policy not in SWITCH_POLICIES:
            raise ConfigError(f"switch_policy must be one of {SWITCH_POLICIES}")
        if not self.threshold_m > 0:
            raise ConfigError(f"threshold_m must be positive, got {self.threshold_m}")
        if int(self.window) != self.window or self.window < 2:
            raise ConfigError("window must be an integer >= 2")
        if not self.rate_hz > 0:
            raise ConfigError("rate_hz must be positive")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be non-negative")
        if self.keepalive_s is not None and not self.keepalive_s > 0:
            raise ConfigError("keepalive_s must be positive when set")

    def to_dict(self) -> dict:
        return {
            "threshold_m": self.threshold_m,
            "window": self.window,
            "rate_hz": self.rate_hz,
            "noise_var": self.noise_var,
            "kernel_template": gpr.kernel_to_dict(self.kernel_template),
            "keepalive_s": self.keepalive_s,
            "optimize": self.optimize,
            "switch_policy": self.switch_policy,
            "bounds": {"variance": list(self.bounds.variance),
                       "lengthscale": list(self.bounds.lengthscale)},
        }


class RawBsm(NamedTuple):
    pos: tuple
    vel: tuple

    def as_cv(self, t) -> CvModel:
        return CvModel(t, tuple(self.pos), tuple(self.vel))


@dataclass(frozen=True, eq=False)
class ModelMessage:
    """One over-the-air message.

    ``payload`` is a :class:`HybridModel` for ``kind == "full"``, the active
    sub-model name for ``"switch"`` and a :class:`RawBsm` for ``"raw"``.
    """

    seq: int
    tx_t: float
    kind: str
    payload: Any


class Decision(NamedTuple):
    t: float
    pte_cv: float
    pte_gp: float
    pte_min: float
    action: str


@dataclass
class TxLog:
    arm: str
    messages: List[ModelMessage] = field(default_factory=list)
    decisions: List[Decision] = field(default_factory=list)

    def emit(self, t, kind, payload):
        msg = ModelMessage(len(self.messages), float(t), kind, payload)
        self.messages.append(msg)
        return msg

    def count(self, kind) -> int:
        return sum(1 for m in self.messages if m.kind == kind)

    def subset(self, keep) -> "TxLog":
        """Copy holding only the messages whose position in ``keep`` is true."""
        return TxLog(self.arm, [m for m, k in zip(self.messages, keep) if k],
                     list(self.decisions))


def _check_traj(traj: EnuTrajectory, cfg: ScheduleConfig, need: int):
    if len(traj) < need:
        raise TraceError(f"trajectory has {len(traj)} samples, needs at least {need}")
    if traj.rate_hz != cfg.rate_hz or not traj.is_uniform():
        raise TraceError(f"trajectory must be uniformly sampled at {cfg.rate_hz} Hz")


def _window_model(traj, end, cfg, cache):
    key = (end, cfg.window, cfg.noise_var, cfg.kernel_template, cfg.optimize, cfg.bounds)
    if cache is not None and key in cache:
        return cache[key]
    sl = slice(end - cfg.window + 1, end + 1)
    model = fit_hybrid(traj.t[sl], traj.x[sl], traj.y[sl], template=cfg.kernel_template,
                       noise_var=cfg.noise_var, optimize=cfg.optimize, bounds=cfg.bounds)
    if cache is not None:
        cache[key] = model
    return model


def run_mbc_transmitter(traj: EnuTrajectory, cfg: ScheduleConfig,
                        cache: Optional[dict] = None) -> TxLog:
    """Run the hybrid-model scheduling policy over ``traj``.

    A full update carries both sub-models retrained on the latest window. Its
    active flag names the sub-model family that predicted the current sample
    better from the previous window; judged at the current sample itself the
    CV residual is zero by construction. The first update, which has no
    previous window, starts on CV.

    ``cache`` (any dict) memoizes window fits across runs on the same
    trajectory, e.g. a threshold sweep; fits depend only on the window.
    """
    n, w = len(traj), cfg.window
    _check_traj(traj, cfg, w + 1)
    log = TxLog("mbc")
    th = cfg.threshold_m

    def refit(i):
        fresh = _window_model(traj, i, cfg, cache)
        if i < w:
            return fresh.with_active(CV)
        prev = _window_model(traj, i - 1, cfg, cache)
        return fresh.with_active(select_sub_model(prev, traj.t[i], traj.pos(i)).active)

    i0 = w - 1
    model = refit(i0)
    log.emit(traj.t[i0], FULL, model)
    log.decisions.append(Decision(float(traj.t[i0]), math.inf, math.inf, math.inf, FULL))
    last_tx = traj.t[i0]

    for i in range(i0 + 1, n):
        t = traj.t[i]
        sel = select_sub_model(model, t, traj.pos(i))
        active_err = sel.pte_cv if model.active == CV else sel.pte_gp
        if sel.pte_min >= th:
            action = FULL
        elif cfg.keepalive_s is not None and t - last_tx >= cfg.keepalive_s - 1e-9:
            action = KEEPALIVE
        elif sel.active != model.active and (cfg.switch_policy == "argmin" or active_err >= th):
            action = SWITCH
        else:
            action = HOLD
        log.decisions.append(Decision(float(t), sel.pte_cv, sel.pte_gp, sel.pte_min, action))
        if action in (FULL, KEEPALIVE):
            model = refit(i)
            log.emit(t, FULL, model)
            last_tx = t
        elif action == SWITCH:
            model = model.with_active(sel.active)
            log.emit(t, SWITCH, sel.active)
            last_tx = t
    return log


def _raw_at(traj, i):
    dt = traj.t[i] - traj.t[i - 1]
    return RawBsm((float(traj.x[i]), float(traj.y[i])),
                  (float((traj.x[i] - traj.x[i - 1]) / dt),
                   float((traj.y[i] - traj.y[i - 1]) / dt)))


def run_baseline_transmitter(traj: EnuTrajectory, cfg: ScheduleConfig) -> TxLog:
    """Error-driven raw messages: resend when constant-velocity coasting drifts by the threshold."""
    _check_traj(traj, cfg, 2)
    log = TxLog("baseline")
    th = cfg.threshold_m

    bsm = _raw_at(traj, 1)
    log.emit(traj.t[1], RAW, bsm)
    log.decisions.append(Decision(float(traj.t[1]), math.inf, math.nan, math.inf, RAW))
    held = bsm.as_cv(float(traj.t[1]))

    for i in range(2, len(traj)):
        t = traj.t[i]
        err = pte(predict(held, t), (traj.x[i], traj.y[i]))
        if err >= th:
            action = RAW
        elif cfg.keepalive_s is not None and t - held.anchor_t >= cfg.keepalive_s - 1e-9:
            action = KEEPALIVE
        else:
            action = HOLD
        log.decisions.append(Decision(float(t), err, math.nan, err, action))
        if action != HOLD:
            bsm = _raw_at(traj, i)
            log.emit(t, RAW, bsm)
            held = bsm.as_cv(float(t))
    return log


class Rates(NamedTuple):
    full_update_hz: float
    switch_hz: float
    total_hz: float


def effective_rates(log: TxLog, duration: float) -> Rates:
    """Message rates per kind; raw baseline messages count as full updates."""
    if not duration > 0:
        raise ConfigError("duration must be positive")
    full = sum(1 for m in log.messages if m.kind in (FULL, RAW))
    switch = log.count(SWITCH)
    return Rates(full / duration, switch / duration, (full + switch) / duration)


# CSV row encoding -----------------------------------------------------------

def _payload_to_json(msg: ModelMessage) -> str:
    if msg.kind == FULL:
        obj = model_to_dict(msg.payload)
    elif msg.kind == SWITCH:
        obj = {"active": msg.payload}
    else:
        obj = {"pos": list(msg.payload.pos), "vel": list(msg.payload.vel)}
    return json.dumps(obj, separators=(",", ":"))


def message_to_row(msg: ModelMessage) -> dict:
    return {"seq": msg.seq, "t": repr(msg.tx_t), "kind": msg.kind,
            "payload": _payload_to_json(msg)}


def message_from_row(row: dict) -> ModelMessage:
    try:
        kind = row["kind"]
        obj = json.loads(row["payload"])
        if kind == FULL:
            payload = model_from_dict(obj)
        elif kind == SWITCH:
            payload = obj["active"]
        elif kind == RAW:
            payload = RawBsm(tuple(obj["pos"]), tuple(obj["vel"]))
        else:
            raise ConfigError(f"unknown message kind {kind!r}")
        return ModelMessage(int(row["seq"]), float(row["t"]), kind, payload)
    except (KeyError, ValueError, TypeError) as exc:
        raise TraceError(f"bad message row: {exc}") from None


def decision_to_row(d: Decision) -> dict:
    return {"t": repr(d.t), "pte_cv": repr(d.pte_cv), "pte_gp": repr(d.pte_gp),
            "pte_min": repr(d.pte_min), "action": d.action}
