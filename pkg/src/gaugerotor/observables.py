"""Interference observables extracted from ensemble-averaged dynamics.

Three analyses live here:

* peak contrasts: the zero-momentum density carries back- and
  forward-scattering peaks on top of a smooth incoherent background; the
  background under a peak is interpolated in time from non-peak kicks.
* contrast dynamics fits: exponential decay of the backscattering
  contrast and the slow forward-scattering growth law
  C0 * I0(2 t_loc / t) * exp(-2 t_loc / t).
* one-parameter scaling: the logarithmic derivative beta(g) of the
  dimensionless conductance g along the spreading of the wave packet.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import curve_fit
from scipy.special import i0e

from .engine import EnsembleResult
from .modulation import ModulationSequence, predict_peak_times

# Kicks earlier than this stay out of the background interpolation: the
# first couple of kicks are still ballistic and curve too steeply.
NODE_MIN = 4


@dataclass(frozen=True)
class ContrastSeries:
    """Peak contrasts versus kick number for one ensemble."""

    cbs_times: np.ndarray
    cbs: np.ndarray
    cbs_se: np.ndarray
    cfs_times: np.ndarray
    cfs: np.ndarray
    cfs_se: np.ndarray

    def cbs_at(self, t: int) -> float:
        i = np.flatnonzero(self.cbs_times == t)
        if i.size == 0:
            raise ValueError(f"no CBS peak at kick {t}")
        return float(self.cbs[i[0]])


@dataclass(frozen=True)
class CfsFit:
    """Parameters of the forward-scattering growth law."""

    c0: float
    t_loc: float
    c0_se: float
    t_loc_se: float
    r_squared: float
    window: tuple[int, int]
    t_dec: float = math.inf

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.c0 * i0e(2.0 * self.t_loc / t) * np.exp(-t / self.t_dec)


@dataclass(frozen=True)
class ScalingCurve:
    """beta(g) = d ln g / d ln L sampled along one spreading trajectory."""

    ln_g: np.ndarray
    ln_l: np.ndarray
    beta: np.ndarray
    inv_g: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.inv_g is None:
            object.__setattr__(self, "inv_g", np.exp(-self.ln_g))


def _background(pi0: np.ndarray, nodes: np.ndarray):
    """Monotone piecewise-cubic interpolant of log Pi0 against log t.

    The log-log representation makes the diffusive power-law decay of
    the background nearly linear, which keeps the interpolant from
    overshooting between widely spaced nodes.
    """
    interp = PchipInterpolator(np.log(nodes), np.log(pi0[nodes]))
    return lambda t: np.exp(interp(np.log(t)))


def extract_contrasts(result: EnsembleResult, seq: ModulationSequence,
                      node_min: int = NODE_MIN) -> ContrastSeries:
    """Peak contrasts (Pi0 - Pi0_incoh) / Pi0_incoh at the predicted
    CBS and CFS kicks.

    The incoherent background at a peak kick is interpolated from
    non-peak kicks of the same parity; with a period-2 component in the
    drive the even and odd kicks lie on distinct smooth branches.
    """
    horizon = len(result.pi0) - 1
    cbs_t, cfs_t = predict_peak_times(seq, horizon)
    peaks = set(cbs_t) | set(cfs_t)
    out = []
    for times in (cbs_t, cfs_t):
        times = np.asarray(times, dtype=int)
        vals = np.empty(times.size)
        errs = np.empty(times.size)
        for parity in (0, 1):
            sel = times % 2 == parity
            if not np.any(sel):
                continue
            nodes = np.array([t for t in range(node_min, horizon + 1)
                              if t % 2 == parity and t not in peaks])
            if nodes.size < 4:
                raise ValueError("horizon too short to interpolate a "
                                 "background through non-peak kicks")
            bg = _background(result.pi0, nodes)(times[sel])
            vals[sel] = result.pi0[times[sel]] / bg - 1.0
            errs[sel] = result.pi0_se[times[sel]] / bg
        out.append((times, vals, errs))
    (cbs_t, cbs, cbs_se), (cfs_t, cfs, cfs_se) = out
    return ContrastSeries(cbs_t, cbs, cbs_se, cfs_t, cfs, cfs_se)


def fit_cbs_decay(series: ContrastSeries, contrast_floor: float = 0.05
                  ) -> tuple[float, float]:
    """Exponential decay time of the backscattering contrast.

    Returns (t_dec, c0) from a weighted linear fit of log C_B against t,
    using only points safely above the noise floor.  A non-decaying
    contrast gives t_dec = inf.
    """
    keep = series.cbs > np.maximum(contrast_floor, 2.0 * series.cbs_se)
    if np.count_nonzero(keep) < 3:
        raise ValueError("too few usable CBS points for a decay fit")
    t = series.cbs_times[keep].astype(float)
    y = np.log(series.cbs[keep])
    w = (series.cbs[keep] / series.cbs_se[keep]) ** 2
    slope, intercept = (float(c) for c in np.polyfit(t, y, 1, w=w))
    t_dec = math.inf if slope >= 0 else -1.0 / slope
    return t_dec, math.exp(intercept)


def fit_cfs_contrast(series: ContrastSeries, period: int,
                     t_min: int | None = None,
                     t_dec: float = math.inf) -> CfsFit:
    """Fit C_F(t) = C0 * I0(2 t_loc / t) * exp(-2 t_loc / t - t / t_dec).

    The fit runs on log C_F with inverse-variance weights, which spans
    the full dynamic range of the slow growth evenly.  The last drive
    period is excluded (the background interpolation has an endpoint
    there) and so are points indistinguishable from zero.  ``t_dec``,
    when finite, is held fixed at the value obtained from the
    backscattering decay fit rather than refitted here.
    """
    horizon = int(series.cfs_times[-1])
    keep = (series.cfs > 3.0 * series.cfs_se) \
        & (series.cfs_times <= horizon - period)
    if t_min is not None:
        keep &= series.cfs_times >= t_min
    if np.count_nonzero(keep) < 5:
        raise ValueError("too few usable CFS points for a growth fit")
    t = series.cfs_times[keep].astype(float)
    y = np.log(series.cfs[keep])
    sigma = series.cfs_se[keep] / series.cfs[keep]

    def model(tt, c0, t_loc):
        return np.log(c0 * i0e(2.0 * t_loc / tt)) - tt / t_dec

    c0_guess = min(max(series.cfs[keep][-1] * math.exp(t[-1] / t_dec), 0.1), 5.0)
    best = None
    # the Bessel asymptote has a shallow secondary optimum at large
    # t_loc, so start from several localization-time scales
    for frac in (0.03, 0.1, 0.3):
        try:
            popt, pcov = curve_fit(model, t, y, p0=(c0_guess, frac * t[-1]),
                                   sigma=sigma,
                                   bounds=([1e-6, 1e-6], [10.0, 10.0 * t[-1]]))
        except RuntimeError:
            continue
        cost = np.sum(((y - model(t, *popt)) / sigma) ** 2)
        if best is None or cost < best[0]:
            best = (cost, popt, pcov)
    if best is None:
        raise ValueError("forward-scattering growth fit did not converge")
    _, popt, pcov = best
    resid = y - model(t, *popt)
    # goodness in the same inverse-variance metric as the fit itself
    w = 1.0 / sigma ** 2
    ybar = np.sum(w * y) / np.sum(w)
    r2 = 1.0 - np.sum(w * resid ** 2) / np.sum(w * (y - ybar) ** 2)
    perr = np.sqrt(np.diag(pcov))
    return CfsFit(float(popt[0]), float(popt[1]), float(perr[0]),
                  float(perr[1]), float(r2), (int(t[0]), int(t[-1])),
                  t_dec=t_dec)


def estimate_d0(times: np.ndarray, p2: np.ndarray,
                curvature_warn: float = 0.10) -> float:
    """Initial diffusion coefficient D0 from <p^2> = 2 D0 t.

    Fits the early linear growth; warns when the window shows relative
    curvature beyond ``curvature_warn`` (onset of localization).
    """
    times = np.asarray(times, dtype=float)
    if times.size < 5:
        raise ValueError("need at least 5 points for a diffusion fit")
    slope = np.polyfit(times[1:], p2[1:] - p2[0], 1)[0]
    half = times.size // 2
    s1 = np.polyfit(times[1:half], p2[1:half] - p2[0], 1)[0]
    s2 = np.polyfit(times[half:], p2[half:] - p2[0], 1)[0]
    if s1 > 0 and abs(s2 - s1) > curvature_warn * s1:
        warnings.warn("diffusion window is curved; D0 estimate may be "
                      "contaminated by localization", stacklevel=2)
    return slope / 2.0


def beta_theory(inv_g: np.ndarray, orthogonal: bool) -> np.ndarray:
    """Weak-localization expansion of the scaling function in quasi-1D:
    beta = -1 - 4 sqrt(2) / (3 sqrt(pi) g) (orthogonal),
    beta = -1 - 1 / (2 g^2) (unitary).
    """
    inv_g = np.asarray(inv_g, dtype=float)
    if orthogonal:
        return -1.0 - (4.0 * math.sqrt(2.0) / (3.0 * math.sqrt(math.pi))) * inv_g
    return -1.0 - 0.5 * inv_g ** 2


def estimate_beta_of_g(times: np.ndarray, p2: np.ndarray, period: int,
                       kbar: float, t_min: int | None = None,
                       subsample_ratio: float = 1.2,
                       window: int = 7,
                       min_window_dlnl: float = 0.04,
                       beta_floor: float = -3.0) -> ScalingCurve:
    """Scaling function along one spreading curve.

    The conductance is g = N sqrt(<p^2>) / (t kbar) and the sample
    length L = sqrt(<p^2>) / kbar.  Times are subsampled geometrically
    so the points are evenly spaced in ln t, the first few periods are
    excluded (transient), and beta = d ln g / d ln L comes from a
    sliding linear regression over ``window`` consecutive points.

    Once the spreading saturates, ln L barely moves across a window and
    the logarithmic derivative degenerates into noise amplification;
    the curve is truncated at the first window whose ln L span falls
    below ``min_window_dlnl`` or whose slope drops below ``beta_floor``.
    """
    times = np.asarray(times, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if t_min is None:
        t_min = 5 * period
    if subsample_ratio <= 1.0:
        raise ValueError("subsample_ratio must exceed 1")
    picks = []
    t = float(t_min)
    while t <= times[-1]:
        idx = int(round(t))
        if not picks or idx > picks[-1]:
            picks.append(idx)
        t *= subsample_ratio
    picks = np.array(picks)
    if picks.size < window + 1:
        raise ValueError("trajectory too short for the requested window")
    pr = p2[picks]
    if np.any(pr <= 0):
        raise ValueError("non-positive <p^2> in the scaling window")
    ln_l = 0.5 * np.log(pr) - math.log(kbar)
    ln_g = math.log(period) + ln_l - np.log(picks)
    beta, mid_g, mid_l = [], [], []
    for i in range(ln_l.size - window + 1):
        sl = slice(i, i + window)
        if ln_l[sl][-1] - ln_l[sl][0] < min_window_dlnl:
            break
        slope = np.polyfit(ln_l[sl], ln_g[sl], 1)[0]
        if slope < beta_floor:
            break
        beta.append(slope)
        mid_g.append(ln_g[sl].mean())
        mid_l.append(ln_l[sl].mean())
    if not beta:
        raise ValueError("sample length saturates before the first window")
    if len(beta) < ln_l.size - window + 1:
        warnings.warn("sample length saturates; truncating the scaling "
                      "curve at the saturation point", stacklevel=2)
    return ScalingCurve(np.array(mid_g), np.array(mid_l), np.array(beta))
