"""Peaks, periods, least-squares fits, finite-size extrapolation and pair-production rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks

from .errors import DomainError, NotEstimable

__all__ = [
    "PeakRecord",
    "FitResult",
    "SingularFitError",
    "MODELS",
    "find_peaks",
    "oscillation_period",
    "first_order_period",
    "linear_fit",
    "curve_fit",
    "finite_size_extrapolation",
    "schwinger_rate",
    "rate_from_series",
]

DEFAULT_PROMINENCE = 1e-3
DEFAULT_RATE_WINDOW = (0.2, 1.0)


class SingularFitError(DomainError):
    pass


@dataclass(frozen=True)
class PeakRecord:
    t_peak: float
    value: float
    index: int


@dataclass
class FitResult:
    model_name: str
    params: dict[str, float]
    stderr: dict[str, float]
    rss: float
    converged: bool = True
    iterations: int = 0
    rss_history: list[float] = field(default_factory=list, repr=False)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    @property
    def values(self) -> np.ndarray:
        return np.array(list(self.params.values()))

    def as_dict(self) -> dict:
        return {
            "model": self.model_name,
            "params": self.params,
            "stderr": self.stderr,
            "rss": self.rss,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _times(series, times):
    y = np.asarray(series, dtype=np.float64)
    t = np.arange(y.size, dtype=np.float64) if times is None else np.asarray(times, dtype=np.float64)
    if t.shape != y.shape:
        raise DomainError("times and series differ in length")
    return y, t


def find_peaks(series, times=None, min_prominence: float = DEFAULT_PROMINENCE) -> list[PeakRecord]:
    """Interior local maxima with prominence >= ``min_prominence``.

    ``t_peak`` is refined by the vertex of the parabola through the three
    samples around the maximum; ``value`` is the sampled maximum.
    """
    y, t = _times(series, times)
    if y.size < 3:
        raise DomainError("need at least 3 samples to look for peaks")
    idx, _ = _scipy_find_peaks(y, prominence=min_prominence)
    out = []
    for i in idx:
        i = int(i)
        t_ref = t[i]
        if 0 < i < y.size - 1:
            y0, y1, y2 = y[i - 1], y[i], y[i + 1]
            curv = y0 - 2.0 * y1 + y2
            if curv < 0:
                delta = 0.5 * (y0 - y2) / curv
                h = t[i + 1] - t[i] if delta > 0 else t[i] - t[i - 1]
                t_ref = t[i] + delta * h
        out.append(PeakRecord(float(t_ref), float(y[i]), i))
    return out


def oscillation_period(series, times=None, min_prominence: float = DEFAULT_PROMINENCE) -> float:
    """Time between the first two accepted maxima."""
    peaks = find_peaks(series, times, min_prominence)
    if len(peaks) < 2:
        raise NotEstimable(f"need two maxima to estimate a period, found {len(peaks)}")
    return peaks[1].t_peak - peaks[0].t_peak


def first_order_period(m: float, g: float) -> float:
    """Inverse of the Dirac-sea to meson energy gap per cell, 1/(2m + g^2/2)."""
    return 1.0 / (2.0 * m + 0.5 * g * g)


def _sorted_xy(xs, ys):
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DomainError("xs and ys differ in length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite data")
    # canonical order makes every fit independent of how pairs were listed
    order = np.lexsort((y, x))
    return x[order], y[order]


def linear_fit(xs, ys) -> FitResult:
    """Ordinary least squares y = slope * x + intercept."""
    x, y = _sorted_xy(xs, ys)
    n = x.size
    if n < 2:
        raise SingularFitError("linear fit needs at least 2 points")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0 or np.unique(x).size < 2:
        raise SingularFitError("all x values coincide; normal equations are singular")
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    rss = float(resid @ resid)
    s2 = rss / (n - 2) if n > 2 else 0.0
    se_slope = math.sqrt(s2 / sxx)
    se_int = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    return FitResult(
        "linear",
        {"slope": slope, "intercept": intercept},
        {"slope": se_slope, "intercept": se_int},
        rss,
        True,
        0,
    )


# nonlinear models ----------------------------------------------------------


@dataclass(frozen=True)
class Model:
    name: str
    names: tuple[str, ...]
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray, np.ndarray], np.ndarray]
    seed: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _peak_seed(x, y, width_from_fwhm):
    i = int(np.argmax(y))
    c = float(y.min())
    A = float(y[i] - c)
    half = c + 0.5 * A
    above = x[y >= half]
    hwhm = 0.5 * float(above.max() - above.min()) if above.size > 1 else 0.0
    if hwhm <= 0:
        hwhm = 0.1 * float(x.max() - x.min()) or 1.0
    return np.array([x[i], A, width_from_fwhm(hwhm), c])


def _lorentz_f(x, p):
    m0, A, gam, c = p
    return A * gam ** 2 / (gam ** 2 + (x - m0) ** 2) + c


def _lorentz_jac(x, p):
    m0, A, gam, c = p
    d = gam ** 2 + (x - m0) ** 2
    return np.column_stack([
        2 * A * gam ** 2 * (x - m0) / d ** 2,
        gam ** 2 / d,
        2 * A * gam * (x - m0) ** 2 / d ** 2,
        np.ones_like(x),
    ])


def _gauss_f(x, p):
    m0, A, s, c = p
    return A * np.exp(-((x - m0) ** 2) / (2 * s ** 2)) + c


def _gauss_jac(x, p):
    m0, A, s, c = p
    e = np.exp(-((x - m0) ** 2) / (2 * s ** 2))
    return np.column_stack([
        A * e * (x - m0) / s ** 2,
        e,
        A * e * (x - m0) ** 2 / s ** 3,
        np.ones_like(x),
    ])


def _recip_f(x, p):
    a, b = p
    return 1.0 / (a * x + b)


def _recip_jac(x, p):
    a, b = p
    d = (a * x + b) ** 2
    return np.column_stack([-x / d, -1.0 / d])


def _recip_seed(x, y):
    if np.any(y == 0):
        return np.array([0.0, 1.0])
    lf = linear_fit(x, 1.0 / y)
    return np.array([lf["slope"], lf["intercept"]])


def _log_f(x, p):
    a, b = p
    return a * np.log(x) + b


def _log_jac(x, p):
    return np.column_stack([np.log(x), np.ones_like(x)])


def _log_seed(x, y):
    if np.any(x <= 0):
        raise DomainError("logarithmic model needs x > 0")
    lf = linear_fit(np.log(x), y)
    return np.array([lf["slope"], lf["intercept"]])


MODELS: dict[str, Model] = {
    "lorentzian": Model(
        "lorentzian", ("m0", "A", "gamma", "c"), _lorentz_f, _lorentz_jac,
        lambda x, y: _peak_seed(x, y, lambda h: h),
    ),
    "gaussian": Model(
        "gaussian", ("m0", "A", "sigma", "c"), _gauss_f, _gauss_jac,
        lambda x, y: _peak_seed(x, y, lambda h: h / math.sqrt(2 * math.log(2))),
    ),
    "reciprocal_linear": Model("reciprocal_linear", ("a", "b"), _recip_f, _recip_jac, _recip_seed),
    "logarithmic": Model("logarithmic", ("a", "b"), _log_f, _log_jac, _log_seed),
}


def curve_fit(
    model: str,
    xs,
    ys,
    init: Sequence[float] | dict | None = None,
    max_iter: int = 200,
    rtol: float = 1e-10,
) -> FitResult:
    """Levenberg-Marquardt damped Gauss-Newton fit of one of ``MODELS``.

    Stops when the relative parameter change of an accepted step is below
    ``rtol`` or after ``max_iter`` iterations; a non-converged result is
    returned with ``converged=False``.
    """
    try:
        mdl = MODELS[model]
    except KeyError:
        raise DomainError(f"unknown model {model!r}; choose from {sorted(MODELS)}") from None
    x, y = _sorted_xy(xs, ys)
    k = len(mdl.names)
    if x.size < k:
        raise DomainError(f"{model} needs at least {k} points, got {x.size}")
    if init is None:
        p = mdl.seed(x, y).astype(np.float64)
    elif isinstance(init, dict):
        p = np.array([init[nm] for nm in mdl.names], dtype=np.float64)
    else:
        p = np.asarray(init, dtype=np.float64)
    if p.shape != (k,) or not np.all(np.isfinite(p)):
        raise DomainError(f"initial parameters must be {k} finite numbers")

    r = y - mdl.f(x, p)
    rss = float(r @ r)
    history = [rss]
    lam = 1e-3
    converged = rss == 0.0
    it = 0
    while it < max_iter and not converged:
        it += 1
        J = mdl.jac(x, p)
        A = J.T @ J
        grad = J.T @ r
        if not np.any(A):
            raise SingularFitError("Jacobian vanishes; normal equations are singular")
        scale = np.diag(A).copy()
        scale[scale == 0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                delta = np.linalg.solve(A + lam * np.diag(scale), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + delta
            r_new = y - mdl.f(x, trial)
            rss_new = float(r_new @ r_new)
            if np.isfinite(rss_new) and rss_new <= rss:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        small = np.all(np.abs(delta) <= rtol * np.maximum(np.abs(trial), 1e-300))
        p, r, rss = trial, r_new, rss_new
        history.append(rss)
        lam = max(lam / 10.0, 1e-15)
        if small or rss == 0.0:
            converged = True

    J = mdl.jac(x, p)
    dof = x.size - k
    s2 = rss / dof if dof > 0 else 0.0
    try:
        cov = np.linalg.inv(J.T @ J) * s2
        se = np.sqrt(np.abs(np.diag(cov)))
    except np.linalg.LinAlgError:
        se = np.full(k, np.nan)
    return FitResult(
        model,
        dict(zip(mdl.names, map(float, p))),
        dict(zip(mdl.names, map(float, se))),
        rss,
        bool(converged),
        it,
        history,
    )


@dataclass(frozen=True)
class Extrapolation:
    rho_inf: float
    beta: float
    rho_inf_err: float
    beta_err: float
    rss: float

    def __iter__(self):
        yield self.rho_inf
        yield self.beta
        yield (self.rho_inf_err, self.beta_err)


def finite_size_extrapolation(pairs) -> Extrapolation:
    """Fit rho(N) = rho_inf - beta / N by least squares in 1/N."""
    pairs = [(float(N), float(r)) for N, r in pairs]
    if len({N for N, _ in pairs}) < 2:
        raise SingularFitError("need at least two distinct chain lengths")
    inv = [1.0 / N for N, _ in pairs]
    fit = linear_fit(inv, [r for _, r in pairs])
    return Extrapolation(
        fit["intercept"], -fit["slope"], fit.stderr["intercept"], fit.stderr["slope"], fit.rss
    )


def schwinger_rate(epsilon: float, m: float) -> float:
    """Continuum pair-production rate (m^2 / 2 pi) eps exp(-pi / eps)."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return m * m / (2.0 * math.pi) * epsilon * math.exp(-math.pi / epsilon)


def rate_from_series(times, series, window=DEFAULT_RATE_WINDOW) -> FitResult:
    """Slope of a straight-line fit of the density over ``window``."""
    y, t = _times(series, times)
    lo, hi = window
    if lo >= hi:
        raise DomainError("empty rate window")
    tol = 1e-9 * max(1.0, abs(hi))
    if lo < t.min() - tol or hi > t.max() + tol:
        raise DomainError(f"window {window} outside sampled range [{t.min()}, {t.max()}]")
    sel = (t >= lo - tol) & (t <= hi + tol)
    return linear_fit(t[sel], y[sel])
