"""
Exact Gaussian-process regression for scalar time series.

Kernels are small immutable trees (``Linear``, ``Rbf`` and their ``Sum``).
Inference follows the usual Cholesky route: factor ``K + noise*I``, solve for
the weight vector once, then reuse the factor for predictive variances and the
log marginal likelihood.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize

from .errors import ConfigError, NumericalError

__all__ = [
    "Linear",
    "Rbf",
    "Sum",
    "KernelSpec",
    "TrainedGp",
    "Bounds",
    "kernel_eval",
    "kernel_matrix",
    "gram",
    "fit",
    "predict_mean",
    "predict_var",
    "log_marginal_likelihood",
    "optimize_hyperparams",
    "kernel_to_dict",
    "kernel_from_dict",
    "DEFAULT_NOISE_VAR",
    "DEFAULT_KERNEL",
]

log = logging.getLogger(__name__)

DEFAULT_NOISE_VAR = 0.01
MAX_SUM_DEPTH = 4

JITTER_START = 1e-10
JITTER_MAX = 1e-4
VAR_CLAMP_TOL = 1e-9


def _depth(spec) -> int:
    if isinstance(spec, Sum):
        return 1 + max(_depth(spec.left), _depth(spec.right))
    return 0


@dataclass(frozen=True)
class Linear:
    """Linear kernel ``variance * (t - offset) * (t' - offset)``."""

    variance: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not self.variance > 0 or not math.isfinite(self.variance):
            raise ConfigError(f"Linear variance must be positive, got {self.variance}")
        if not math.isfinite(self.offset):
            raise ConfigError("Linear offset must be finite")

    def matrix(self, a, b):
        return self.variance * np.multiply.outer(a - self.offset, b - self.offset)

    def diag(self, a):
        return self.variance * (a - self.offset) ** 2


@dataclass(frozen=True)
class Rbf:
    """Squared-exponential kernel ``variance * exp(-(t - t')**2 / (2 lengthscale**2))``."""

    variance: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if not self.variance > 0 or not math.isfinite(self.variance):
            raise ConfigError(f"Rbf variance must be positive, got {self.variance}")
        if not self.lengthscale > 0 or not math.isfinite(self.lengthscale):
            raise ConfigError(f"Rbf lengthscale must be positive, got {self.lengthscale}")

    def matrix(self, a, b):
        d = np.subtract.outer(a, b) / self.lengthscale
        return self.variance * np.exp(-0.5 * d * d)

    def diag(self, a):
        return np.full(np.shape(a), self.variance, dtype=float)


@dataclass(frozen=True)
class Sum:
    left: "KernelSpec"
    right: "KernelSpec"

    def __post_init__(self):
        if _depth(self) > MAX_SUM_DEPTH:
            raise ConfigError(f"Sum nesting deeper than {MAX_SUM_DEPTH}")

    def matrix(self, a, b):
        return self.left.matrix(a, b) + self.right.matrix(a, b)

    def diag(self, a):
        return self.left.diag(a) + self.right.diag(a)


KernelSpec = Union[Linear, Rbf, Sum]

# the compound kernel used for trajectory windows
DEFAULT_KERNEL = Sum(Linear(1.0, 0.0), Rbf(1.0, 1.0))


def _shifted(spec, shift):
    """The same kernel expressed in time coordinates moved left by ``shift``."""
    if shift == 0.0:
        return spec
    if isinstance(spec, Linear):
        return Linear(spec.variance, spec.offset - shift)
    if isinstance(spec, Sum):
        return Sum(_shifted(spec.left, shift), _shifted(spec.right, shift))
    return spec


def kernel_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """Cross-covariance matrix between the time vectors ``a`` and ``b``."""
    return spec.matrix(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def kernel_eval(spec: KernelSpec, t: float, t2: float) -> float:
    return float(kernel_matrix(spec, [t], [t2])[0, 0])


def _factor(spec, ts, noise_var):
    """Return ``(A, L)`` with ``A = K + (noise_var + jitter) I`` and ``L L^T = A``."""
    K = kernel_matrix(spec, ts, ts)
    K = 0.5 * (K + K.T)
    A = K + noise_var * np.eye(len(ts))
    try:
        return A, np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-12):
        Aj = A + jitter * np.eye(len(ts))
        try:
            L = np.linalg.cholesky(Aj)
        except np.linalg.LinAlgError:
            jitter *= 10.0
            continue
        log.debug("cholesky needed jitter %.1e (m=%d)", jitter, len(ts))
        return Aj, L
    raise NumericalError(
        f"Cholesky failed for {len(ts)}x{len(ts)} Gram even with jitter {JITTER_MAX:g}")


def gram(spec: KernelSpec, ts, noise_var: float = DEFAULT_NOISE_VAR) -> np.ndarray:
    """Noise-augmented Gram matrix of ``ts``.

    Stabilization jitter is added to the diagonal only when the plain
    factorization fails; :class:`NumericalError` is raised once the jitter
    exceeds ``1e-4``.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.ndim != 1 or len(ts) == 0:
        raise ConfigError("gram needs a non-empty 1-d vector of times")
    return _factor(spec, ts, noise_var)[0]


@dataclass(frozen=True, eq=False)
class TrainedGp:
    """A GP conditioned on one training window.

    ``chol`` factors the Gram of the shifted times ``train_t - shift``. The
    shift is the first training time; predictions shift query times the same
    way, so the stored kernel stays in absolute time.
    """

    kernel: KernelSpec
    noise_var: float
    train_t: np.ndarray
    train_y: np.ndarray
    alpha: np.ndarray
    chol: np.ndarray
    mean_fn: float
    shift: float = 0.0
    _local: KernelSpec = field(default=None, repr=False)

    def __post_init__(self):
        if self._local is None:
            object.__setattr__(self, "_local", _shifted(self.kernel, self.shift))

    @property
    def m(self) -> int:
        return len(self.train_t)

    def to_dict(self) -> dict:
        return {
            "kernel": kernel_to_dict(self.kernel),
            "noise_var": float(self.noise_var),
            "mean": float(self.mean_fn),
            "train_t": [float(v) for v in self.train_t],
            "train_y": [float(v) for v in self.train_y],
            "alpha": [float(v) for v in self.alpha],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedGp":
        return fit(d["train_t"], d["train_y"], kernel_from_dict(d["kernel"]),
                   d["noise_var"], mean=d["mean"])


def fit(ts, ys, spec: KernelSpec = DEFAULT_KERNEL,
        noise_var: float = DEFAULT_NOISE_VAR, mean="window") -> TrainedGp:
    """Condition a GP prior on observations ``(ts, ys)``.

    ``mean`` selects the constant prior mean: ``"window"`` (the default) uses
    the average of ``ys``; a number is used as-is.
    """
    ts = np.array(ts, dtype=float)
    ys = np.array(ys, dtype=float)
    if ts.ndim != 1 or ts.shape != ys.shape or len(ts) == 0:
        raise ConfigError("fit needs equally sized, non-empty ts and ys")
    if np.any(np.diff(ts) <= 0):
        raise ConfigError("training times must be strictly increasing")
    if noise_var < 0:
        raise ConfigError("noise_var must be non-negative")
    if isinstance(mean, str):
        if mean != "window":
            raise ConfigError(f"unknown mean mode {mean!r}")
        mean_fn = float(np.mean(ys))
    else:
        mean_fn = float(mean)

    shift = float(ts[0])
    local = _shifted(spec, shift)
    _, L = _factor(local, ts - shift, noise_var)
    alpha = sla.cho_solve((L, True), ys - mean_fn)
    for arr in (ts, ys, alpha, L):
        arr.setflags(write=False)
    return TrainedGp(spec, float(noise_var), ts, ys, alpha, L, mean_fn, shift, local)


def _cross(gp: TrainedGp, t_star):
    t_star = np.asarray(t_star, dtype=float)
    return t_star, kernel_matrix(gp._local, np.atleast_1d(t_star) - gp.shift,
                                 gp.train_t - gp.shift)


def predict_mean(gp: TrainedGp, t_star):
    """Posterior mean at ``t_star`` (scalar or array)."""
    t_star, ks = _cross(gp, t_star)
    mu = gp.mean_fn + ks @ gp.alpha
    return float(mu[0]) if t_star.ndim == 0 else mu


def predict_var(gp: TrainedGp, t_star):
    """Posterior variance at ``t_star``, clamped at zero."""
    t_star, ks = _cross(gp, t_star)
    v = sla.solve_triangular(gp.chol, ks.T, lower=True)
    var = gp._local.diag(np.atleast_1d(t_star) - gp.shift) - np.sum(v * v, axis=0)
    low = var.min()
    if low < 0:
        if low < -VAR_CLAMP_TOL:
            log.warning("predictive variance %.3e clamped to zero", low)
        else:
            log.debug("predictive variance %.3e clamped to zero", low)
        var = np.maximum(var, 0.0)
    return float(var[0]) if t_star.ndim == 0 else var


def log_marginal_likelihood(gp: TrainedGp) -> float:
    r = gp.train_y - gp.mean_fn
    return float(-0.5 * r @ gp.alpha
                 - np.sum(np.log(np.diag(gp.chol)))
                 - 0.5 * gp.m * math.log(2 * math.pi))


# hyperparameter search ---------------------------------------------------

@dataclass(frozen=True)
class Bounds:
    """Box constraints for the hyperparameter search (inclusive)."""

    variance: tuple = (1e-4, 1e4)
    lengthscale: tuple = (0.05, 10.0)

    def __post_init__(self):
        for name in ("variance", "lengthscale"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi) or not math.isfinite(hi):
                raise ConfigError(f"empty or invalid {name} bounds ({lo}, {hi})")

    def of(self, kind):
        return getattr(self, kind)


def _params(spec):
    """Free hyperparameters as a list of ``(kind, value)`` in tree order."""
    if isinstance(spec, Linear):
        return [("variance", spec.variance)]
    if isinstance(spec, Rbf):
        return [("variance", spec.variance), ("lengthscale", spec.lengthscale)]
    return _params(spec.left) + _params(spec.right)


def _with_params(spec, values):
    """Rebuild ``spec`` from a flat value iterator in ``_params`` order."""
    if isinstance(spec, Linear):
        return Linear(next(values), spec.offset)
    if isinstance(spec, Rbf):
        return Rbf(next(values), next(values))
    left = _with_params(spec.left, values)
    return Sum(left, _with_params(spec.right, values))


def _with_offset(spec, offset):
    if isinstance(spec, Linear):
        return replace(spec, offset=offset)
    if isinstance(spec, Sum):
        return Sum(_with_offset(spec.left, offset), _with_offset(spec.right, offset))
    return spec


class _Objective:
    """Negative LML over log-hyperparameters on a fixed window."""

    def __init__(self, spec, ts, ys, noise_var):
        self.spec = spec
        self.ts = ts - ts[0]
        self.r = ys - ys.mean()
        self.noise_var = noise_var
        self.local = _shifted(spec, ts[0])
        self.const = 0.5 * len(ts) * math.log(2 * math.pi)

    def lml(self, values) -> float:
        k = _with_params(self.local, iter(values))
        try:
            _, L = _factor(k, self.ts, self.noise_var)
        except NumericalError:
            return -math.inf
        a = sla.cho_solve((L, True), self.r)
        return float(-0.5 * self.r @ a - np.sum(np.log(np.diag(L))) - self.const)


def optimize_hyperparams(ts, ys, template: KernelSpec = DEFAULT_KERNEL,
                         bounds: Bounds = Bounds(),
                         noise_var: float = DEFAULT_NOISE_VAR,
                         maxfev: int = 150) -> KernelSpec:
    """Maximize the log marginal likelihood over the template's hyperparameters.

    Every linear offset is pinned to the mean of ``ts``. The search is a
    bounded Nelder-Mead simplex in log space run from three fixed starts: the
    template itself, the log-centre of the box, and a short-lengthscale point.
    The best candidate (never worse than the clipped template) is returned.
    """
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ts.ndim != 1 or len(ts) < 2 or ts.shape != ys.shape:
        raise ConfigError("hyperparameter search needs a window of at least 2 samples")
    if not isinstance(bounds, Bounds):
        raise ConfigError("bounds must be a Bounds instance")

    spec = _with_offset(template, float(ts.mean()))
    kinds, init = zip(*_params(spec))
    lo = np.log([bounds.of(k)[0] for k in kinds])
    hi = np.log([bounds.of(k)[1] for k in kinds])
    x0 = np.clip(np.log(init), lo, hi)
    free = hi > lo

    obj = _Objective(spec, ts, ys, noise_var)

    def full(z):
        x = x0.copy()
        x[free] = z
        return np.exp(x)

    best_x, best_f = x0[free], obj.lml(np.exp(x0))
    if free.any():
        mid = 0.5 * (lo + hi)
        short = np.where(np.array(kinds) == "lengthscale",
                         lo + 0.25 * (hi - lo), x0 + math.log(100.0))
        starts = [x0, mid, np.clip(short, lo, hi)]
        box = list(zip(lo[free], hi[free]))
        for s in starts:
            res = minimize(lambda z: -obj.lml(full(z)), s[free], method="Nelder-Mead",
                           bounds=box, options={"maxfev": maxfev, "xatol": 1e-4,
                                                "fatol": 1e-9})
            f = -float(res.fun)
            if f > best_f:
                best_x, best_f = res.x, f
    x = x0.copy()
    x[free] = best_x
    return _with_params(spec, iter(np.exp(x).tolist()))


# canonical JSON encoding ---------------------------------------------------

def kernel_to_dict(spec: KernelSpec) -> dict:
    if isinstance(spec, Linear):
        return {"type": "linear", "variance": spec.variance, "offset": spec.offset}
    if isinstance(spec, Rbf):
        return {"type": "rbf", "variance": spec.variance, "lengthscale": spec.lengthscale}
    return {"type": "sum", "left": kernel_to_dict(spec.left),
            "right": kernel_to_dict(spec.right)}


def kernel_from_dict(d: dict) -> KernelSpec:
    try:
        kind = d["type"]
        if kind == "linear":
            return Linear(float(d["variance"]), float(d["offset"]))
        if kind == "rbf":
            return Rbf(float(d["variance"]), float(d["lengthscale"]))
        if kind == "sum":
            return Sum(kernel_from_dict(d["left"]), kernel_from_dict(d["right"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad kernel encoding: {d!r}") from exc
    raise ConfigError(f"unknown kernel type {kind!r}")
