"""Compiled scaled-Prüfer integrator for w'' = -q(x) w.

q(x) = a + b / sn^2(x, k) + d sn^2(x, k).  With w = rho sin(theta) and
w' = S rho cos(theta):

    theta'   = S cos^2 + (q / S) sin^2
    ln rho'  = (S - q / S) sin cos

Both variables stay smooth and O(1)-scaled even where w grows or vanishes,
so one relative tolerance fits the whole range.  Stepping uses the DOP853
tableau shipped with scipy.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

from .elliptic import _complement, _landen_table

_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)


def landen_arrays(k: float):
    a, c = _landen_table(k)
    return np.array(a), np.array(c), _complement(k)


@njit(cache=True)
def _sn_core(u, la, lc):
    n = la.size - 1
    phi = (2.0 ** n) * la[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + math.asin(lc[j] * math.sin(phi) / la[j]))
    return math.sin(phi), math.cos(phi)


@njit(cache=True)
def sn2(u, k, kp, big_k, la, lc):
    """sn^2(u, k) for real u."""
    u = abs(u) % (2.0 * big_k)
    if u > big_k:
        u = 2.0 * big_k - u
    if u > 0.5 * big_k:
        s, c = _sn_core(big_k - u, la, lc)
        d2 = kp * kp + k * k * c * c
        # sn(K - v) = cd(v)
        return c * c / d2
    s, c = _sn_core(u, la, lc)
    return s * s


@njit(cache=True)
def _rhs(x, th, p, out):
    a, b, d, scale, k, kp, big_k = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
    la = p[7:7 + int(p[-1])]
    lc = p[7 + int(p[-1]):7 + 2 * int(p[-1])]
    q = a
    if b != 0.0 or d != 0.0:
        s2 = sn2(x, k, kp, big_k, la, lc)
        q += d * s2
        if b != 0.0:
            q += b / s2
    sn_, cs_ = math.sin(th), math.cos(th)
    out[0] = scale * cs_ * cs_ + q / scale * sn_ * sn_
    out[1] = (scale - q / scale) * sn_ * cs_


@njit(cache=True)
def integrate(p, x0, y0, x_out, rtol, atol):
    """Integrate (theta, ln rho) from x0 and return values at sorted x_out."""
    nout = x_out.size
    res = np.empty((nout, 2))
    kst = np.empty((_NS + 1, 2))
    y = y0.copy()
    x = x0
    f = np.empty(2)
    _rhs(x, y[0], p, f)
    span = x_out[nout - 1] - x0
    h_nat = 1e-3 * span if span > 0 else 1e-3
    ytmp = np.empty(2)
    ynew = np.empty(2)
    fnew = np.empty(2)
    j = 0
    nsteps = 0
    while j < nout and x_out[j] <= x:
        res[j, 0] = y[0]
        res[j, 1] = y[1]
        j += 1
    while j < nout:
        target = x_out[j]
        h = min(h_nat, target - x)
        clipped = h < h_nat
        nsteps += 1
        if nsteps > 2000000:
            res[:, :] = np.nan
            return res
        kst[0, 0] = f[0]
        kst[0, 1] = f[1]
        for s in range(1, _NS):
            for i in range(2):
                acc = 0.0
                for r in range(s):
                    acc += _A[s, r] * kst[r, i]
                ytmp[i] = y[i] + h * acc
            _rhs(x + _C[s] * h, ytmp[0], p, fnew)
            kst[s, 0] = fnew[0]
            kst[s, 1] = fnew[1]
        for i in range(2):
            acc = 0.0
            for r in range(_NS):
                acc += _B[r] * kst[r, i]
            ynew[i] = y[i] + h * acc
        _rhs(x + h, ynew[0], p, fnew)
        kst[_NS, 0] = fnew[0]
        kst[_NS, 1] = fnew[1]
        e5 = 0.0
        e3 = 0.0
        for i in range(2):
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            a5 = 0.0
            a3 = 0.0
            for r in range(_NS + 1):
                a5 += _E5[r] * kst[r, i]
                a3 += _E3[r] * kst[r, i]
            e5 += (a5 / sc) ** 2
            e3 += (a3 / sc) ** 2
        den = e5 + 0.01 * e3
        err = 0.0 if den == 0.0 else h * e5 / math.sqrt(den * 2.0)
        if err < 1.0:
            x = x + h
            if clipped:
                x = target
            y[0] = ynew[0]
            y[1] = ynew[1]
            f[0] = fnew[0]
            f[1] = fnew[1]
            fac = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** (-0.125))
            if not clipped or fac < 1.0:
                h_nat = h * fac
            while j < nout and x_out[j] <= x:
                res[j, 0] = y[0]
                res[j, 1] = y[1]
                j += 1
        else:
            h_nat = h * max(0.2, 0.9 * err ** (-0.125))
    return res


def pack_params(a: float, b: float, d: float, scale: float, k: float, big_k: float) -> np.ndarray:
    la, lc, kp = landen_arrays(k)
    return np.concatenate([[a, b, d, scale, k, kp, big_k], la, lc, [float(la.size)]])


class ChebPanels:
    """Piecewise Chebyshev interpolant of the two Prüfer variables."""

    def __init__(self, edges: np.ndarray, coef: np.ndarray):
        self.edges = edges
        self.coef = coef  # (npanel, 2, deg+1)

    @classmethod
    def build(cls, p, x0, y0, edges, deg=23, rtol=1e-13, atol=1e-13):
        j = np.arange(deg + 1)
        nodes = np.cos(np.pi * (j + 0.5) / (deg + 1))[::-1]  # ascending in [-1, 1]
        lo, hi = edges[:-1, None], edges[1:, None]
        xs = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        vals = integrate(p, x0, np.asarray(y0, dtype=float), xs.ravel(), rtol, atol)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("Prüfer integration failed")
        vals = vals.reshape(xs.shape + (2,))
        coef = np.empty((edges.size - 1, 2, deg + 1))
        for i in range(2):
            coef[:, i, :] = np.polynomial.chebyshev.chebfit(nodes, vals[:, :, i].T, deg).T
        return cls(edges, coef)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        idx = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, self.edges.size - 2)
        lo, hi = self.edges[idx], self.edges[idx + 1]
        u = (2.0 * flat - lo - hi) / (hi - lo)
        c = self.coef[idx]  # (N, 2, deg+1)
        # Clenshaw
        b1 = np.zeros((flat.size, 2))
        b2 = np.zeros((flat.size, 2))
        u2 = 2.0 * u[:, None]
        for kk in range(c.shape[2] - 1, 0, -1):
            b1, b2 = u2 * b1 - b2 + c[:, :, kk], b1
        out = u[:, None] * b1 - b2 + c[:, :, 0]
        return out[:, 0].reshape(x.shape), out[:, 1].reshape(x.shape)
