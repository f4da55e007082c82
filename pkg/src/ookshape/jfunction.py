"""J-function: MI between a code bit and a consistent Gaussian LLR of std sigma.

J(sigma) = 1 - E[log2(1 + exp(-L))],  L ~ N(sigma^2 / 2, sigma^2).

Values come from a dense quadrature-built table on ``[0, 60]`` (step 1e-3)
with monotone cubic (PCHIP) interpolation. The inverse locates the table
segment by binary search and bisects the cubic inside it.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numba
import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_hermite

SIGMA_MAX = 60.0
STEP = 1e-3
_QUAD_NODES = 256


class JTable(NamedTuple):
    step: float
    coef: np.ndarray    # (4, n - 1) PCHIP coefficients, highest power first
    values: np.ndarray  # J at the grid points
    sigma_max: float
    mi_sat: float       # largest tabulated MI strictly below saturation


def j_quadrature(sigma: np.ndarray) -> np.ndarray:
    """J by Gauss-Hermite quadrature, without interpolation."""
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    t, w = roots_hermite(_QUAD_NODES)
    x, w = t * math.sqrt(2.0), w / math.sqrt(math.pi)
    out = np.empty_like(sigma)
    for start in range(0, sigma.size, 4096):
        s = sigma[start:start + 4096, None]
        llr = 0.5 * s**2 + s * x[None, :]
        out[start:start + 4096] = 1.0 - (np.logaddexp(0.0, -llr) @ w) / math.log(2.0)
    out[sigma == 0] = 0.0
    return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=1)
def get_table() -> JTable:
    grid = np.linspace(0.0, SIGMA_MAX, int(round(SIGMA_MAX / STEP)) + 1)
    vals = np.maximum.accumulate(j_quadrature(grid))
    pchip = PchipInterpolator(grid, vals)
    strict = np.flatnonzero(np.diff(vals) > 0)
    mi_sat = float(vals[strict[-1] + 1])
    return JTable(STEP, np.ascontiguousarray(pchip.c), vals, SIGMA_MAX, mi_sat)


@numba.njit(cache=True, nogil=True)
def j_eval(s, step, coef, values):
    if s <= 0.0:
        return 0.0
    n = values.shape[0]
    i = int(s / step)
    if i >= n - 1:
        return values[n - 1]
    dx = s - i * step
    return ((coef[0, i] * dx + coef[1, i]) * dx + coef[2, i]) * dx + coef[3, i]


@numba.njit(cache=True, nogil=True)
def j_inv_eval(mi, step, coef, values, sigma_max, mi_sat):
    if mi <= 0.0:
        return 0.0
    if mi >= mi_sat:
        return sigma_max
    # segment i with values[i] <= mi < values[i + 1]
    lo, hi = 0, values.shape[0] - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if values[mid] <= mi:
            lo = mid
        else:
            hi = mid
    i = lo
    a, b = 0.0, step
    for _ in range(40):
        m = 0.5 * (a + b)
        v = ((coef[0, i] * m + coef[1, i]) * m + coef[2, i]) * m + coef[3, i]
        if v < mi:
            a = m
        else:
            b = m
    return i * step + 0.5 * (a + b)


@numba.njit(cache=True)
def _j_vec(s, step, coef, values):
    out = np.empty(s.shape[0])
    for k in range(s.shape[0]):
        out[k] = j_eval(s[k], step, coef, values)
    return out


@numba.njit(cache=True)
def _j_inv_vec(m, step, coef, values, sigma_max, mi_sat):
    out = np.empty(m.shape[0])
    for k in range(m.shape[0]):
        out[k] = j_inv_eval(m[k], step, coef, values, sigma_max, mi_sat)
    return out


def j_fun(sigma):
    """J(sigma) for scalar or array input."""
    tab = get_table()
    arr = np.asarray(sigma, dtype=float)
    if np.any(arr < 0):
        raise ValueError("sigma must be non-negative")
    out = _j_vec(arr.ravel(), tab.step, tab.coef, tab.values).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def j_inv(mi, with_flag: bool = False):
    """Inverse of :func:`j_fun`.

    MI values at or above the last resolvable table value saturate to
    ``SIGMA_MAX``; pass ``with_flag=True`` to also get the saturation mask.
    """
    tab = get_table()
    arr = np.asarray(mi, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("mi must lie in [0, 1]")
    flat = arr.ravel()
    out = _j_inv_vec(flat, tab.step, tab.coef, tab.values, tab.sigma_max, tab.mi_sat)
    out = out.reshape(arr.shape)
    sat = arr >= tab.mi_sat
    if out.ndim == 0:
        out, sat = float(out), bool(sat)
    return (out, sat) if with_flag else out
