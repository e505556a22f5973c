"""Standard normal distribution function, its log, density and inverse."""

from __future__ import annotations

import numpy as np
from scipy import special

_SQRT2 = np.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

# Acklam's rational approximation to the normal quantile, relative error < 1.15e-9
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(x):
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def norm_logcdf(x):
    return special.log_ndtr(np.asarray(x, dtype=float))


def norm_logpdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - _LOG_SQRT_2PI


def norm_pdf(x):
    return np.exp(norm_logpdf(x))


def mills_ratio(x):
    """phi(x) / Phi(x), computed in log space so it stays finite for x << 0."""
    return np.exp(norm_logpdf(x) - norm_logcdf(x))


def _poly(coefs, t):
    acc = np.zeros_like(t)
    for c in coefs:
        acc = acc * t + c
    return acc


def _acklam(p: np.ndarray) -> np.ndarray:
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = p[mid] - 0.5
    r = q * q
    out[mid] = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)

    q = np.sqrt(-2.0 * np.log(p[lo]))
    out[lo] = _poly(_C, q) / (_poly(_D, q) * q + 1.0)

    q = np.sqrt(-2.0 * np.log1p(-p[hi]))
    out[hi] = -_poly(_C, q) / (_poly(_D, q) * q + 1.0)
    return out


def norm_ppf(p):
    """Inverse of ``norm_cdf`` on (0, 1); 0 and 1 map to -inf and +inf.

    Rational starting value refined by one Newton step on ``norm_cdf``.
    """
    p = np.asarray(p, dtype=float)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    if np.any((p < 0) | (p > 1) | np.isnan(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    out = np.full_like(p, np.nan)
    out[p == 0] = -np.inf
    out[p == 1] = np.inf
    inner = (p > 0) & (p < 1)
    x = _acklam(p[inner])
    # Newton step; in the upper tail work with the survival function
    upper = x > 0
    resid = np.where(upper, norm_cdf(-x) - (1.0 - p[inner]), p[inner] - norm_cdf(x))
    out[inner] = x + resid / norm_pdf(x)
    return out[0] if scalar else out
