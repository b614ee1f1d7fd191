"""Lamé-Wangerin eigenpairs of the modified Lamé equation.

    w''(t) + (lam - nu(nu+1) dc^2(t, kappa)) w(t) = 0,   -K < t < K,

with w recessive (exponent nu+1) at both singular end points t = +-K.
Eigenvalues are found by shooting from a Frobenius seed at t = K - delta
inward to t = 0 in scaled Prüfer variables; the phase target (n+1) pi/2 at
t = 0 fixes the index n and the zero count at once.

Along the imaginary axis W(is, kappa) satisfies the real equation

    U''(s) = (lam - nu(nu+1) + nu(nu+1) k^2 sn^2(s, k)) U(s),   k = kappa',

and is stored as the real representative U~ with W(is) = i^(n mod 2) U~(s).
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
import threading
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import optimize

from . import _fastode
from .elliptic import Modulus

log = logging.getLogger(__name__)

SOLVER_VERSION = "peanut-lame-1"
DEFAULT_DELTA_FRACTION = 1e-3
RTOL = 1e-12

__all__ = [
    "LameError",
    "BracketError",
    "LameProblem",
    "LameMode",
    "EigenCache",
    "lemma_bracket",
    "ns2_laurent",
    "frobenius_coefficients",
    "frobenius_seed",
    "solve_eigen",
    "eval_w",
    "eval_w_deriv",
    "eval_w_imag",
    "wronskian",
    "frobenius_leading_coeff",
    "get_mode",
    "set_cache",
]


class LameError(RuntimeError):
    pass


class BracketError(LameError):
    pass


@dataclass(frozen=True)
class LameProblem:
    nu: float
    n: int
    kappa: Modulus

    def __post_init__(self):
        if not isinstance(self.kappa, Modulus):
            object.__setattr__(self, "kappa", Modulus(float(self.kappa)))
        if self.nu < -0.5:
            raise ValueError(f"nu must be >= -1/2, got {self.nu}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def c(self) -> float:
        """The coupling nu(nu+1)."""
        return self.nu * (self.nu + 1.0)

    @property
    def big_k(self) -> float:
        return self.kappa.big_k


def lemma_bracket(nu: float, n: int, kappa: float | Modulus) -> tuple[float, float]:
    """Sturm-comparison bounds on the n-th eigenvalue (lower, upper)."""
    mod = kappa if isinstance(kappa, Modulus) else Modulus(kappa)
    w2 = mod.omega ** 2
    a = w2 * (n + nu + 1.0) ** 2
    b = nu * (nu + 1.0) * (1.0 - w2) + a
    return (a, b) if nu >= 0 else (b, a)


def ns2_laurent(kappa: float, nterms: int) -> list[float]:
    """Coefficients d_i with ns^2(r, kappa) = 1/r^2 + sum_i d_i r^(2i)."""
    k2 = kappa * kappa
    g2 = 4.0 / 3.0 * (1.0 - k2 + k2 * k2)
    g3 = 4.0 / 27.0 * (1.0 + k2) * (2.0 - k2) * (1.0 - 2.0 * k2)
    # Weierstrass p-function: 1/r^2 + sum_{j>=2} c_j r^(2j-2)
    c = [0.0, 0.0, g2 / 20.0, g3 / 28.0]
    for j in range(4, nterms + 2):
        c.append(3.0 / ((2 * j + 1) * (j - 3)) * sum(c[m] * c[j - m] for m in range(2, j - 1)))
    return [(1.0 + k2) / 3.0] + c[2:nterms + 1]


def frobenius_coefficients(nu: float, lam: float, kappa: float, order: int) -> np.ndarray:
    """a_0..a_order of w = sum a_j r^(j+nu+1), r = K - t, with a_0 = 1."""
    c = nu * (nu + 1.0)
    d = ns2_laurent(kappa, order // 2 + 2)
    a = np.zeros(order + 1)
    a[0] = 1.0
    for j in range(2, order + 1, 2):
        acc = -lam * a[j - 2]
        for i in range(0, (j - 2) // 2 + 1):
            acc += c * d[i] * a[j - 2 - 2 * i]
        a[j] = acc / (j * (j + 2.0 * nu + 1.0))
    return a


def _series_eval(a: np.ndarray, nu: float, r):
    """Return (w, dw/dr) of the Frobenius series at r > 0."""
    r = np.asarray(r, dtype=float)
    j = np.arange(a.size)
    pw = r[..., None] ** j
    w = (pw * a).sum(-1) * r ** (nu + 1.0)
    dw = (pw * a * (j + nu + 1.0)).sum(-1) * r ** nu
    return w, dw


def frobenius_seed(problem: LameProblem, lambda_trial: float, delta: float,
                   order: int = 24) -> tuple[float, float]:
    """(w, dw/dt) at t = K - delta for the recessive solution with a_0 = 1."""
    big_k = problem.big_k
    if not 0.0 < delta <= 0.05 * big_k:
        raise ValueError("delta must lie in (0, 0.05 K]")
    if order < 8:
        raise ValueError("order must be at least 8")
    a = frobenius_coefficients(problem.nu, lambda_trial, problem.kappa.k, order)
    terms = np.abs(a) * delta ** np.arange(a.size)
    total = terms.sum()
    if terms[-2:].max() > 1e-10 * total:
        raise LameError("Frobenius series not converged at this delta/order")
    w, dw = _series_eval(a, problem.nu, delta)
    return float(w), -float(dw)


def _series_order(problem: LameProblem, lam: float, delta: float) -> int:
    order = 16
    while order < 200:
        a = frobenius_coefficients(problem.nu, lam, problem.kappa.k, order)
        terms = np.abs(a) * delta ** np.arange(a.size)
        if terms[-2:].max() <= 1e-17 * terms.sum():
            return order
        order += 8
    raise LameError("Frobenius series does not converge at the chosen delta")


def _prufer_start(problem, lam, delta, scale):
    order = _series_order(problem, lam, delta)
    a = frobenius_coefficients(problem.nu, lam, problem.kappa.k, order)
    # work with w / delta^(nu+1) so the seed is O(1); the log offset is added back
    w, dw = _series_eval(a, problem.nu, delta)
    off = (problem.nu + 1.0) * math.log(delta)
    w_s, dw_s = w / math.exp(off), dw / math.exp(off)
    theta0 = math.atan2(scale * w_s, dw_s)
    lnrho0 = math.log(math.hypot(w_s, dw_s / scale)) + off
    return a, theta0, lnrho0


def _real_params(problem, lam, scale):
    return _fastode.pack_params(lam, -problem.c, 0.0, scale, problem.kappa.k, problem.big_k)


def _phase_mismatch(problem, lam, delta, scale):
    _, th0, lr0 = _prufer_start(problem, lam, delta, scale)
    p = _real_params(problem, lam, scale)
    y = _fastode.integrate(p, delta, np.array([th0, lr0]), np.array([problem.big_k]), RTOL, 1e-13)
    if not np.isfinite(y[0, 0]):
        raise LameError("Prüfer integration failed")
    return y[0, 0] - 0.5 * (problem.n + 1) * math.pi


def _real_edges(delta, big_k, scale):
    # graded panels near the singular end, uniform elsewhere
    r1 = min(0.2 * big_k, max(20.0 * delta, 2.0 / scale))
    head = np.geomspace(delta, r1, 7)
    body = np.linspace(r1, big_k, max(4, int(math.ceil(1.5 * scale * (big_k - r1)))) + 1)
    return np.concatenate([head, body[1:]])


@dataclass
class LameMode:
    """A solved Lamé-Wangerin eigenpair with dense evaluators.

    ``norm_constant`` is the factor d with W = d F, where F has a_0 = 1;
    it therefore coincides with ``frobenius_a0``.
    """

    problem: LameProblem
    lam: float
    parity: str
    log_norm: float
    delta: float
    series: np.ndarray = field(repr=False)
    _real: object = field(repr=False)
    scale: float = 1.0
    end_residual: float = 0.0

    @property
    def norm_constant(self) -> float:
        return math.exp(self.log_norm)

    @property
    def frobenius_a0(self) -> float:
        return math.exp(self.log_norm)

    @property
    def nu(self) -> float:
        return self.problem.nu

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def sign(self) -> int:
        return 1 if self.problem.n % 2 == 0 else -1

    def record(self) -> dict:
        return {
            "nu": self.problem.nu,
            "n": self.problem.n,
            "kappa": self.problem.kappa.k,
            "lambda": self.lam,
            "norm_constant": self.norm_constant,
            "frobenius_a0": self.frobenius_a0,
            "parity": self.parity,
            "solver_version": SOLVER_VERSION,
        }

    # -- real axis ---------------------------------------------------------

    def _half(self, r, deriv=False):
        """W and dW/dr for r = K - |t| in (0, K]."""
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        near = r < self.delta
        if np.any(near):
            w, dw = _series_eval(self.series, self.nu, r[near])
            out[near] = (dw if deriv else w) * self.norm_constant
        far = ~near
        if np.any(far):
            th, lr = self._real(r[far])
            amp = np.exp(lr + self.log_norm)
            out[far] = amp * (self.scale * np.cos(th) if deriv else np.sin(th))
        return out

    def w(self, t):
        t = np.asarray(t, dtype=float)
        big_k = self.problem.big_k
        if np.any(np.abs(t) >= big_k):
            raise ValueError("eval_w needs |t| < K")
        val = self._half(big_k - np.abs(t))
        return np.where(t < 0, self.sign * val, val)

    def dw(self, t):
        t = np.asarray(t, dtype=float)
        big_k = self.problem.big_k
        if np.any(np.abs(t) >= big_k):
            raise ValueError("eval_w needs |t| < K")
        val = -self._half(big_k - np.abs(t), deriv=True)
        # W' has the opposite parity of W
        return np.where(t < 0, -self.sign * val, val)

    # -- imaginary axis ----------------------------------------------------

    @cached_property
    def coordinate_modulus(self) -> Modulus:
        return self.problem.kappa.complement()

    @cached_property
    def _imag(self):
        mod = self.coordinate_modulus
        k, big_k = mod.k, mod.big_k
        c, lam = self.problem.c, self.lam
        th_k, lr_k = self._real(np.array([self.problem.big_k]))
        th_k, lr_k = float(th_k[0]), float(lr_k[0]) + self.log_norm
        scale = math.sqrt(max(lam - c, 1.0))
        if self.n % 2 == 0:
            # U~(0) = W(0), U~'(0) = 0
            val = math.sin(th_k)
            y0 = [math.copysign(0.5 * math.pi, val), lr_k + math.log(abs(val))]
        else:
            # U~(0) = 0, U~'(0) = W'(0) = -dW/dr
            val = -self.scale * math.cos(th_k)
            y0 = [0.0 if val > 0 else math.pi, lr_k + math.log(abs(val) / scale)]
        s_max = 2.2 * big_k
        p = _fastode.pack_params(-(lam - c), 0.0, -c * k * k, scale, k, big_k)
        edges = np.linspace(0.0, s_max, 9)
        panels = _fastode.ChebPanels.build(p, 0.0, y0, edges, rtol=1e-13, atol=1e-13)
        return panels, scale, s_max

    def u_tilde(self, s, deriv: bool = False):
        """Real representative of W(is) (or of d/ds W(is) / i^p when deriv)."""
        panels, scale, s_max = self._imag
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        if np.any(a > s_max):
            raise OverflowError(f"|s| exceeds the integrated range {s_max}")
        th, lr = panels(a)
        if np.any(lr > math.log(1e300)):
            raise OverflowError("imaginary-axis solution exceeds 1e300")
        vals = np.exp(lr) * (scale * np.cos(th) if deriv else np.sin(th))
        # U~ has parity (-1)^n and U~' the opposite one
        par = self.sign if not deriv else -self.sign
        out = np.where(s < 0, par * vals, vals)
        return float(out) if out.ndim == 0 else out

    @property
    def phase(self) -> complex:
        return 1.0 if self.n % 2 == 0 else 1j


def _finish(problem, lam, delta, scale) -> LameMode:
    a, th0, lr0 = _prufer_start(problem, lam, delta, scale)
    big_k = problem.big_k
    p = _real_params(problem, lam, scale)
    edges = _real_edges(delta, big_k, scale)
    panels = _fastode.ChebPanels.build(p, delta, [th0, lr0], edges, rtol=1e-13, atol=1e-13)
    th_end = float(panels(np.array([big_k]))[0][0])
    end_residual = abs(th_end - 0.5 * (problem.n + 1) * math.pi)
    # integral of F^2 over (delta, K), Gauss-Legendre on each panel
    xg, wg = np.polynomial.legendre.leggauss(32)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
    th, lr = panels(x.ravel())
    lr_max = lr.max()
    f2 = (np.exp(2.0 * (lr - lr_max)) * np.sin(th) ** 2).reshape(x.shape)
    body = float((0.5 * (hi - lo) * f2 * wg).sum())
    # series part: int_0^delta (sum a_j r^(j+nu+1))^2 dr
    j = np.arange(a.size)
    e = j[:, None] + j[None, :] + 2.0 * problem.nu + 3.0
    series = float((np.outer(a, a) * delta ** e / e).sum())
    total_scaled = body + series * math.exp(-2.0 * lr_max)
    log_norm = -0.5 * (math.log(2.0 * total_scaled) + 2.0 * lr_max)
    parity = "even" if problem.n % 2 == 0 else "odd"
    return LameMode(problem=problem, lam=lam, parity=parity, log_norm=log_norm,
                    delta=delta, series=a, _real=panels, scale=scale,
                    end_residual=end_residual)


def _scale_for(lam: float) -> float:
    return math.sqrt(max(abs(lam), 1.0))


def solve_eigen(problem: LameProblem, delta: float | None = None,
                lam_hint: float | None = None) -> LameMode:
    """Shoot for the n-th eigenvalue and return the normalised mode."""
    big_k = problem.big_k
    delta = DEFAULT_DELTA_FRACTION * big_k if delta is None else delta
    if lam_hint is not None:
        mode = _finish(problem, lam_hint, delta, _scale_for(lam_hint))
        if mode.end_residual < 1e-8:
            return mode
        log.info("cached eigenvalue failed revalidation; re-solving %s", problem)
    lo, hi = lemma_bracket(problem.nu, problem.n, problem.kappa)
    pad = 0.01 * max(abs(lo), abs(hi), hi - lo)
    lo, hi = lo - pad, hi + pad
    scale = _scale_for(hi)
    f_lo = _phase_mismatch(problem, lo, delta, scale)
    f_hi = _phase_mismatch(problem, hi, delta, scale)
    if f_lo * f_hi > 0:
        raise BracketError(f"no sign change of the phase condition in [{lo}, {hi}] for {problem}")
    try:
        lam = optimize.brentq(lambda x: _phase_mismatch(problem, x, delta, scale),
                              lo, hi, xtol=1e-14 * max(1.0, abs(hi)), rtol=1e-15, maxiter=200)
    except RuntimeError as exc:
        raise LameError(f"eigenvalue iteration did not converge: {exc}") from exc
    return _finish(problem, lam, delta, _scale_for(lam))


# -- public evaluators ------------------------------------------------------


def eval_w(mode: LameMode, t):
    out = mode.w(t)
    return float(out) if np.ndim(out) == 0 else out


def eval_w_deriv(mode: LameMode, t):
    out = mode.dw(t)
    return float(out) if np.ndim(out) == 0 else out


def eval_w_imag(mode: LameMode, s):
    """(U~(s), phase) with W(is, kappa) = phase * U~(s)."""
    return mode.u_tilde(s), mode.phase


def wronskian(mode: LameMode) -> float:
    """V U~' - V' U~ with V(s) = U~(2K - s), K of the coordinate modulus.

    This is the real-representative value; for odd n the complex Wronskian
    of W(is) is its negative.
    """
    big_k = mode.coordinate_modulus.big_k
    vals = []
    for s in (0.5 * big_k, big_k, 1.5 * big_k):
        u, du = mode.u_tilde(s), mode.u_tilde(s, deriv=True)
        v, dv = mode.u_tilde(2 * big_k - s), -mode.u_tilde(2 * big_k - s, deriv=True)
        vals.append(v * du - dv * u)
    w = vals[1]
    spread = max(abs(x - w) for x in vals) / abs(w)
    if spread > 1e-8:
        raise LameError(f"Wronskian not constant (relative spread {spread:.2e})")
    return w


def frobenius_leading_coeff(mode: LameMode, deltas=(1e-2, 1e-3, 1e-4)) -> float:
    """a_0 of the normalised eigenfunction at t = K, cross-checked by extrapolation."""
    a0 = mode.frobenius_a0
    big_k = mode.problem.big_k
    d = np.asarray(deltas, dtype=float)
    d = d[d < 0.5 * big_k]
    g = mode.w(big_k - d) / d ** (mode.nu + 1.0)
    # W / r^(nu+1) = a0 (1 + O(r^2)); Richardson on the last two samples
    extra = g[-1] + (g[-1] - g[-2]) / ((d[-2] / d[-1]) ** 2 - 1.0)
    if abs(extra - a0) > 1e-6 * abs(a0):
        raise LameError(f"a0 extrapolation disagrees: {extra} vs {a0}")
    return a0


# -- cache ------------------------------------------------------------------


def _key(nu: float, n: int, kappa: float) -> tuple:
    return (round(float(nu), 12), int(n), round(float(kappa), 12))


class EigenCache:
    """JSON file of solved eigenvalues; single writer, atomic replace."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.records: dict[tuple, dict] = {}
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        if self.path.exists():
            for rec in json.loads(self.path.read_text() or "[]"):
                self.records[_key(rec["nu"], rec["n"], rec["kappa"])] = rec

    def get(self, nu, n, kappa) -> dict | None:
        rec = self.records.get(_key(nu, n, kappa))
        if rec is not None and rec.get("solver_version") == SOLVER_VERSION:
            return rec
        return None

    def put(self, record: dict) -> None:
        with self._lock:
            self.records[_key(record["nu"], record["n"], record["kappa"])] = record

    def save(self) -> None:
        with self._lock:
            recs = [self.records[k] for k in sorted(self.records)]
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".cache-", suffix=".json")
            with os.fdopen(fd, "w") as fh:
                json.dump(recs, fh, indent=1)
            os.replace(tmp, self.path)


_MODES: dict[tuple, LameMode] = {}
_MODES_LOCK = threading.Lock()
_CACHE: EigenCache | None = None


def set_cache(cache: EigenCache | None) -> None:
    global _CACHE
    _CACHE = cache


def get_mode(nu: float, n: int, kappa: float) -> LameMode:
    """Memoised :func:`solve_eigen`, consulting the persistent cache if set."""
    key = _key(nu, n, kappa)
    mode = _MODES.get(key)
    if mode is not None:
        return mode
    problem = LameProblem(nu, n, Modulus(kappa))
    hint = None
    if _CACHE is not None:
        rec = _CACHE.get(nu, n, kappa)
        if rec is not None:
            hint = rec["lambda"]
            _CACHE.hits += 1
        else:
            _CACHE.misses += 1
    mode = solve_eigen(problem, lam_hint=hint)
    if _CACHE is not None and hint is None:
        _CACHE.put(mode.record())
    with _MODES_LOCK:
        _MODES.setdefault(key, mode)
    return _MODES[key]
