"""
Deterministic synthetic driving scenarios on a uniform time grid.

The vehicle travels along +x (East); lane changes displace it along +y
(North). Scenarios are closed-form, so traces are exact up to float rounding
unless position noise is requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ConfigError
from .geo import EnuTrajectory

__all__ = [
    "Cruise",
    "LaneChange",
    "HardBrake",
    "Mixed",
    "ScenarioSpec",
    "generate",
    "mixed_demo",
    "SCENARIOS",
    "scenario_from_dict",
    "scenario_to_dict",
]


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(f"{name} must be positive, got {value}")


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class Cruise:
    speed: float
    duration_s: Optional[float] = None

    def __post_init__(self):
        _positive("speed", self.speed)
        if self.duration_s is not None:
            _positive("duration_s", self.duration_s)

    @property
    def length(self):
        return self.duration_s

    def displacement(self, tau):
        return self.speed * tau, np.zeros_like(tau)


@dataclass(frozen=True)
class LaneChange:
    """Constant forward speed with a smoothstep lateral shift of ``lateral_m``."""

    speed: float
    lateral_m: float
    duration_s: float

    def __post_init__(self):
        _positive("speed", self.speed)
        _positive("lateral_m", self.lateral_m)
        _positive("duration_s", self.duration_s)

    @property
    def length(self):
        return self.duration_s

    def displacement(self, tau):
        return self.speed * tau, self.lateral_m * smoothstep(tau / self.duration_s)


@dataclass(frozen=True)
class HardBrake:
    """Constant deceleration from ``v0`` to standstill, then stationary."""

    v0: float
    decel: float

    def __post_init__(self):
        _positive("v0", self.v0)
        _positive("decel", self.decel)

    @property
    def length(self):
        return self.v0 / self.decel

    def displacement(self, tau):
        s = np.minimum(tau, self.length)
        return self.v0 * s - 0.5 * self.decel * s * s, np.zeros_like(tau)


Segment = Union[Cruise, LaneChange, HardBrake]


@dataclass(frozen=True)
class Mixed:
    """Segments played back to back; the last one extends to the end of the run."""

    segments: Tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ConfigError("Mixed scenario needs at least one segment")
        for s in segs[:-1]:
            if isinstance(s, Mixed) or s.length is None:
                raise ConfigError("every Mixed segment but the last needs a finite duration")
        object.__setattr__(self, "segments", segs)

    @property
    def length(self):
        last = self.segments[-1].length
        if last is None:
            return None
        return sum(s.length for s in self.segments)

    def displacement(self, tau):
        tau = np.asarray(tau, dtype=float)
        x = np.zeros_like(tau)
        y = np.zeros_like(tau)
        x0 = y0 = 0.0
        start = 0.0
        for k, seg in enumerate(self.segments):
            last = k == len(self.segments) - 1
            end = math.inf if last else start + seg.length
            mask = (tau >= start) & (tau < end)
            dx, dy = seg.displacement(tau[mask] - start)
            x[mask] = x0 + dx
            y[mask] = y0 + dy
            if not last:
                ex, ey = seg.displacement(np.array(seg.length))
                x0, y0 = x0 + float(ex), y0 + float(ey)
                start = end
        return x, y


@dataclass(frozen=True)
class ScenarioSpec:
    kind: Union[Segment, Mixed]
    rate_hz: float = 10.0
    noise_std_m: float = 0.0

    def __post_init__(self):
        _positive("rate_hz", self.rate_hz)
        if not (self.noise_std_m >= 0 and math.isfinite(self.noise_std_m)):
            raise ConfigError("noise_std_m must be non-negative")


def generate(spec: ScenarioSpec, duration_s: Optional[float] = None,
             seed: int = 0) -> EnuTrajectory:
    """Sample ``spec`` on ``[0, duration_s]`` at ``spec.rate_hz``.

    ``duration_s`` defaults to the scenario's natural length when it has one.
    """
    if not isinstance(spec, ScenarioSpec):
        raise ConfigError("generate expects a ScenarioSpec")
    if duration_s is None:
        duration_s = spec.kind.length
        if duration_s is None:
            raise ConfigError("scenario has no natural length; pass duration_s")
    _positive("duration_s", duration_s)
    n = int(math.floor(duration_s * spec.rate_hz + 1e-9)) + 1
    t = np.arange(n) / spec.rate_hz
    x, y = spec.kind.displacement(t)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if spec.noise_std_m > 0:
        rng = np.random.default_rng(seed)
        x = x + rng.normal(0.0, spec.noise_std_m, n)
        y = y + rng.normal(0.0, spec.noise_std_m, n)
    return EnuTrajectory(t, x, y, rate_hz=spec.rate_hz)


MIXED_DEMO_NOISE_M = 0.05


def mixed_demo(rate_hz: float = 10.0, noise_std_m: float = MIXED_DEMO_NOISE_M) -> ScenarioSpec:
    """Cruise 10 s, lane change 3 s, cruise 5 s, brake to standstill, hold 2 s.

    Positions carry 5 cm Gaussian jitter by default, roughly what a 10 Hz
    GPS receiver shows sample to sample; pass ``noise_std_m=0`` for the exact
    kinematics.
    """
    return ScenarioSpec(Mixed((
        Cruise(10.0, 10.0),
        LaneChange(10.0, 3.5, 3.0),
        Cruise(10.0, 5.0),
        HardBrake(10.0, 5.0),
    )), rate_hz=rate_hz, noise_std_m=noise_std_m)


MIXED_DEMO_DURATION = 22.0

# name -> (spec factory, default duration)
SCENARIOS = {
    "cruise": (lambda: ScenarioSpec(Cruise(10.0)), 20.0),
    "lane-change": (lambda: ScenarioSpec(Mixed((Cruise(10.0, 3.0),
                                                LaneChange(10.0, 3.5, 3.0)))), 12.0),
    "hard-brake": (lambda: ScenarioSpec(Mixed((Cruise(20.0, 3.0),
                                               HardBrake(20.0, 5.0)))), 10.0),
    "mixed-demo": (mixed_demo, MIXED_DEMO_DURATION),
}


# JSON encoding --------------------------------------------------------------

_KINDS = {"cruise": Cruise, "lane_change": LaneChange, "hard_brake": HardBrake}


def _kind_to_dict(kind):
    if isinstance(kind, Mixed):
        return {"kind": "mixed", "segments": [_kind_to_dict(s) for s in kind.segments]}
    name = next(k for k, cls in _KINDS.items() if isinstance(kind, cls))
    d = {"kind": name}
    d.update({k: v for k, v in vars(kind).items() if v is not None})
    return d


def _kind_from_dict(d):
    d = dict(d)
    name = d.pop("kind", None)
    if name == "mixed":
        return Mixed(tuple(_kind_from_dict(s) for s in d.get("segments", ())))
    if name not in _KINDS:
        raise ConfigError(f"unknown scenario kind {name!r}")
    try:
        return _KINDS[name](**d)
    except TypeError as exc:
        raise ConfigError(f"bad {name} parameters: {exc}") from None


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {"rate_hz": spec.rate_hz, "noise_std_m": spec.noise_std_m,
            **_kind_to_dict(spec.kind)}


def scenario_from_dict(d: dict) -> ScenarioSpec:
    d = dict(d)
    rate = d.pop("rate_hz", 10.0)
    noise = d.pop("noise_std_m", 0.0)
    return ScenarioSpec(_kind_from_dict(d), rate_hz=rate, noise_std_m=noise)
