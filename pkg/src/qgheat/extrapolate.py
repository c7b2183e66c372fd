"""Small-``t`` limit estimation and log-log slope fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

__all__ = [
    "LimitEstimate",
    "exponential_limit",
    "sqrt_limit",
    "SlopeFit",
    "loglog_slope",
]


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    uncertainty: float
    extrapolants: tuple[float, ...] = ()
    model_ok: bool = True


def _sorted_small_last(ts, fs):
    ts = np.asarray(ts, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if ts.shape != fs.shape or ts.ndim != 1:
        raise ValueError("t and f samples must be 1-d arrays of equal length")
    if np.any(ts <= 0):
        raise ValueError("t samples must be positive")
    order = np.argsort(-ts)
    return ts[order], fs[order]


def exponential_limit(ts, fs) -> LimitEstimate:
    """Limit of ``f(t) = a + b exp(-c/t)`` as ``t -> 0``.

    The model is solved exactly through the three smallest ``t``.  When
    the samples do not fit it (``c <= 0`` or the differences change sign)
    the smallest-``t`` value is returned with ``model_ok=False``.  The
    uncertainty is the spread between the fitted limit and the three
    samples' smallest-``t`` value.
    """
    ts, fs = _sorted_small_last(ts, fs)
    if ts.shape[0] < 3:
        raise ValueError("need at least three samples")
    (t0, t1, t2), (f0, f1, f2) = ts[-3:], fs[-3:]
    d01, d12 = f0 - f1, f1 - f2
    fallback = LimitEstimate(float(f2), float(abs(d12)), (float(f2),), False)
    scale = max(abs(f0), abs(f1), abs(f2), 1e-300)
    if abs(d01) <= 1e-15 * scale or abs(d12) <= 1e-15 * scale:
        return LimitEstimate(float(f2), float(abs(d12)), (float(f2),), True)
    ratio = d12 / d01
    if ratio <= 0:
        return fallback

    def mismatch(log_c):
        c = math.exp(log_c)
        q0, q1, q2 = (math.exp(-c / t) for t in (t0, t1, t2))
        if q0 == q1:
            return -ratio
        return (q1 - q2) / (q0 - q1) - ratio

    # the model ratio falls monotonically from its c -> 0 value to 0
    lo, hi = math.log(1e-12 * t2), math.log(1e3 * t0)
    try:
        if mismatch(lo) * mismatch(hi) > 0:
            return fallback
        log_c = optimize.brentq(mismatch, lo, hi, xtol=1e-14, maxiter=500)
    except (ValueError, RuntimeError):
        return fallback
    c = math.exp(log_c)
    q0, q1, q2 = (math.exp(-c / t) for t in (t0, t1, t2))
    b = d01 / (q0 - q1)
    a = f2 - b * q2
    return LimitEstimate(float(a), float(abs(f2 - a)), (float(a),), True)


def sqrt_limit(ts, fs) -> LimitEstimate:
    """Limit of ``f(t) = L + b sqrt(t)`` from consecutive pairs of samples.

    Each adjacent pair yields one extrapolant; the estimate is the last
    (smallest-``t``) one and its uncertainty the spread of the last three.
    """
    ts, fs = _sorted_small_last(ts, fs)
    if ts.shape[0] < 4:
        raise ValueError("need at least four samples for three extrapolants")
    r = np.sqrt(ts)
    ext = (fs[:-1] * r[1:] - fs[1:] * r[:-1]) / (r[1:] - r[:-1])
    last3 = ext[-3:]
    return LimitEstimate(
        float(ext[-1]), float(np.max(last3) - np.min(last3)), tuple(float(x) for x in ext)
    )


@dataclass(frozen=True)
class SlopeFit:
    exponent: float
    stderr: float
    intercept: float

    def band(self, z: float = 2.0) -> tuple[float, float]:
        return self.exponent - z * self.stderr, self.exponent + z * self.stderr


def loglog_slope(xs, ys) -> SlopeFit:
    """Least-squares slope of ``log|y|`` against ``log x``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    if np.any(ys == 0):
        raise ValueError("log-log fit needs non-zero values")
    fit = stats.linregress(np.log(xs), np.log(ys))
    return SlopeFit(float(fit.slope), float(fit.stderr), float(fit.intercept))
