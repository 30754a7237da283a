"""
Predictive motion sub-models built from a short window of ENU samples.

``CvModel`` coasts the last sample at the velocity of the last two samples.
``GpModel`` regresses East and North independently against time. A
``HybridModel`` carries both plus a flag naming the one the receiver uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import gp as gpr
from .errors import ConfigError

__all__ = [
    "CV",
    "GP",
    "CvModel",
    "GpModel",
    "HybridModel",
    "Selection",
    "fit_cv",
    "fit_gp",
    "fit_hybrid",
    "predict",
    "pte",
    "select_sub_model",
    "model_to_dict",
    "model_from_dict",
]

CV = "CV"
GP = "GP"
SUB_MODELS = (CV, GP)


@dataclass(frozen=True)
class CvModel:
    anchor_t: float
    anchor_pos: tuple
    velocity: tuple

    def __post_init__(self):
        vals = (self.anchor_t, *self.anchor_pos, *self.velocity)
        if len(vals) != 5 or not all(math.isfinite(v) for v in vals):
            raise ConfigError("CvModel fields must be finite 2-d values")


@dataclass(frozen=True, eq=False)
class GpModel:
    gp_x: gpr.TrainedGp
    gp_y: gpr.TrainedGp

    @property
    def window_start_t(self) -> float:
        return float(self.gp_x.train_t[0])

    @property
    def window_end_t(self) -> float:
        return float(self.gp_x.train_t[-1])


@dataclass(frozen=True, eq=False)
class HybridModel:
    cv: CvModel
    gp: GpModel
    active: str = CV

    def __post_init__(self):
        if self.active not in SUB_MODELS:
            raise ConfigError(f"active must be one of {SUB_MODELS}, got {self.active!r}")

    def with_active(self, active: str) -> "HybridModel":
        return replace(self, active=active)

    def sub_model(self, name=None):
        return self.cv if (name or self.active) == CV else self.gp


def _window(ts, xs, ys):
    ts, xs, ys = (np.asarray(a, dtype=float) for a in (ts, xs, ys))
    if not ts.shape == xs.shape == ys.shape or ts.ndim != 1:
        raise ConfigError("window arrays must be 1-d and equally sized")
    return ts, xs, ys


def fit_cv(ts, xs, ys) -> CvModel:
    """Anchor at the last sample; velocity from the last two samples."""
    ts, xs, ys = _window(ts, xs, ys)
    if len(ts) < 2:
        raise ConfigError("CV fit needs at least 2 samples")
    dt = ts[-1] - ts[-2]
    if dt <= 0:
        raise ConfigError("window times must be increasing")
    return CvModel(float(ts[-1]), (float(xs[-1]), float(ys[-1])),
                   (float((xs[-1] - xs[-2]) / dt), float((ys[-1] - ys[-2]) / dt)))


def fit_gp(ts, xs, ys, template: gpr.KernelSpec = gpr.DEFAULT_KERNEL,
           noise_var: float = gpr.DEFAULT_NOISE_VAR, optimize: bool = True,
           bounds: gpr.Bounds = gpr.Bounds()) -> GpModel:
    """Fit one GP per axis on the window, optionally re-optimizing hyperparameters."""
    ts, xs, ys = _window(ts, xs, ys)
    axes = []
    for vals in (xs, ys):
        if optimize and len(ts) >= 2:
            spec = gpr.optimize_hyperparams(ts, vals, template, bounds, noise_var)
        else:
            spec = template
        axes.append(gpr.fit(ts, vals, spec, noise_var))
    return GpModel(*axes)


def fit_hybrid(ts, xs, ys, **gp_kwargs) -> HybridModel:
    return HybridModel(fit_cv(ts, xs, ys), fit_gp(ts, xs, ys, **gp_kwargs), CV)


def predict(model, t_star):
    """Position ``(x, y)`` predicted by a CV, GP or hybrid (active sub-model) model."""
    if isinstance(model, HybridModel):
        model = model.sub_model()
    if isinstance(model, CvModel):
        dt = t_star - model.anchor_t
        return (model.anchor_pos[0] + model.velocity[0] * dt,
                model.anchor_pos[1] + model.velocity[1] * dt)
    if isinstance(model, GpModel):
        return gpr.predict_mean(model.gp_x, t_star), gpr.predict_mean(model.gp_y, t_star)
    raise TypeError(f"cannot predict with {type(model).__name__}")


def pte(predicted, actual) -> float:
    """Planar Euclidean position tracking error."""
    return math.hypot(predicted[0] - actual[0], predicted[1] - actual[1])


class Selection(NamedTuple):
    active: str
    pte_cv: float
    pte_gp: float

    @property
    def pte_min(self) -> float:
        return min(self.pte_cv, self.pte_gp)


def select_sub_model(hybrid: HybridModel, t: float, actual) -> Selection:
    """Score both sub-models against ``actual`` at ``t``; ties go to CV."""
    e_cv = pte(predict(hybrid.cv, t), actual)
    e_gp = pte(predict(hybrid.gp, t), actual)
    return Selection(CV if e_cv <= e_gp else GP, e_cv, e_gp)


# JSON encoding --------------------------------------------------------------

def model_to_dict(model: HybridModel) -> dict:
    cv = model.cv
    return {
        "active": model.active,
        "cv": {"anchor_t": cv.anchor_t, "anchor_pos": list(cv.anchor_pos),
               "velocity": list(cv.velocity)},
        "gp": {"x": model.gp.gp_x.to_dict(), "y": model.gp.gp_y.to_dict()},
    }


def model_from_dict(d: dict) -> HybridModel:
    try:
        cv = CvModel(float(d["cv"]["anchor_t"]), tuple(d["cv"]["anchor_pos"]),
                     tuple(d["cv"]["velocity"]))
        gpm = GpModel(gpr.TrainedGp.from_dict(d["gp"]["x"]),
                      gpr.TrainedGp.from_dict(d["gp"]["y"]))
        return HybridModel(cv, gpm, d["active"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad hybrid model encoding: {exc}") from None
