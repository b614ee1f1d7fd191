"""Classical special functions used by the peanut-harmonic identities.

Legendre Q_nu(z) for z > 1, Ferrers P_n^m, Gegenbauer C_n^lam, the
Gegenbauer normalisation integral and a log-gamma wrapper.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, special

__all__ = [
    "SpecfunDomainError",
    "HalfIntegerDegree",
    "log_gamma",
    "legendre_q",
    "legendre_q_heine",
    "legendre_q_series",
    "q_asymptotic_prefactor",
    "ferrers_p",
    "gegenbauer_c",
    "pochhammer",
    "e_coefficient",
    "gauss_jacobi",
]


class SpecfunDomainError(ValueError):
    pass


class HalfIntegerDegree(int):
    """Degree nu = m - 1/2 stored as the non-negative integer m."""

    def __new__(cls, m: int):
        if int(m) != m or m < 0:
            raise SpecfunDomainError(f"m must be a non-negative integer, got {m!r}")
        return super().__new__(cls, int(m))

    @property
    def nu(self) -> float:
        return int(self) - 0.5


def log_gamma(x: float) -> float:
    if not x > 0:
        raise SpecfunDomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def q_asymptotic_prefactor(nu: float) -> float:
    """sqrt(pi) Gamma(nu+1) / (2^(nu+1) Gamma(nu+3/2)), the large-z scale of Q_nu."""
    return math.exp(0.5 * math.log(math.pi) + math.lgamma(nu + 1.0)
                    - (nu + 1.0) * math.log(2.0) - math.lgamma(nu + 1.5))


def _check_q_args(nu: float, z: float) -> None:
    if nu < -0.5:
        raise SpecfunDomainError(f"legendre_q needs nu >= -1/2, got {nu!r}")
    if not z > 1.0:
        raise SpecfunDomainError(f"legendre_q needs z > 1, got {z!r}")
    if z - 1.0 < 1e-6:
        warnings.warn("legendre_q evaluated within 1e-6 of z = 1; accuracy is reduced",
                      RuntimeWarning, stacklevel=3)


def legendre_q_heine(nu: float, z: float) -> float:
    """Q_nu(z) from the Heine integral of (z + sqrt(z^2-1) cosh tau)^(-nu-1)."""
    _check_q_args(nu, z)
    c = math.sqrt((z - 1.0) * (z + 1.0))
    p = nu + 1.0

    # x = exp(-tau) maps [0, inf) onto (0, 1]; x^(p-1) goes into the quad weight
    def g(x):
        return (z * x + 0.5 * c * (1.0 + x * x)) ** (-p)

    knee = min(0.5, c / (2.0 * z))
    # the requested tolerance sits at the roundoff floor; quad may say so
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(g, 0.0, knee, weight="alg", wvar=(p - 1.0, 0.0),
                                 epsabs=0.0, epsrel=2e-14, limit=200)
        tail, _ = integrate.quad(lambda x: x ** (p - 1.0) * g(x), knee, 1.0,
                                 epsabs=0.0, epsrel=2e-14, limit=200)
    return head + tail


def legendre_q_series(nu: float, z: float, max_terms: int = 400) -> float:
    """Large-z hypergeometric series; rapid for z >= 2."""
    _check_q_args(nu, z)
    x = 1.0 / (z * z)
    a, b, c = 0.5 * (nu + 2.0), 0.5 * (nu + 1.0), nu + 1.5
    term, total = 1.0, 1.0
    for j in range(max_terms):
        term *= (a + j) * (b + j) / ((c + j) * (j + 1.0)) * x
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return q_asymptotic_prefactor(nu) * z ** (-nu - 1.0) * total


def legendre_q(nu: float, z: float) -> float:
    """Legendre function of the second kind Q_nu(z), nu >= -1/2, real z > 1."""
    if z >= 2.0:
        return legendre_q_series(nu, z)
    return legendre_q_heine(nu, z)


def pochhammer(a: float, n: int) -> float:
    out = 1.0
    for j in range(n):
        out *= a + j
    return out


def gegenbauer_c(n: int, lam: float, x):
    """Gegenbauer polynomial C_n^lam(x) by the three-term recurrence."""
    if n < 0 or int(n) != n:
        raise SpecfunDomainError(f"degree must be a non-negative integer, got {n!r}")
    if lam <= -0.5:
        raise SpecfunDomainError(f"lam must exceed -1/2, got {lam!r}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise SpecfunDomainError("x must lie in [-1, 1]")
    c0 = np.ones_like(x)
    if n == 0:
        return float(c0) if x.ndim == 0 else c0
    c1 = 2.0 * lam * x
    for j in range(2, n + 1):
        c0, c1 = c1, (2.0 * x * (j + lam - 1.0) * c1 - (j + 2.0 * lam - 2.0) * c0) / j
    return float(c1) if x.ndim == 0 else c1


def ferrers_p(n: int, m: int, x):
    """Ferrers function of the first kind P_n^m(x) on [-1, 1].

    Carries the (-1)^m phase, so that
    P_{m+n}^m(x) = (-1/2)^m (2m)!/m! (1-x^2)^(m/2) C_n^(m+1/2)(x).
    """
    if int(n) != n or int(m) != m or n < 0 or not 0 <= m <= n:
        raise SpecfunDomainError(f"need 0 <= m <= n integers, got n={n!r}, m={m!r}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise SpecfunDomainError("x must lie in [-1, 1]")
    sq = np.sqrt(np.clip((1.0 - x) * (1.0 + x), 0.0, None))
    pmm = np.ones_like(x)
    for j in range(1, m + 1):
        pmm = -(2 * j - 1) * sq * pmm
    if n == m:
        out = pmm
    else:
        p_prev, p_cur = pmm, (2 * m + 1) * x * pmm
        for ell in range(m + 2, n + 1):
            p_prev, p_cur = p_cur, ((2 * ell - 1) * x * p_cur - (ell + m - 1) * p_prev) / (ell - m)
        out = p_cur
    return float(out) if out.ndim == 0 else out


def e_coefficient(nu: float, n: int) -> float:
    """Integral of (1-x^2)^(nu+1/2) (C_n^(nu+1)(x))^2 over [-1, 1], closed form."""
    if nu < -0.5 or n < 0:
        raise SpecfunDomainError("need nu >= -1/2 and n >= 0")
    log_val = (math.log(math.pi) + math.lgamma(n + 2.0 * nu + 2.0)
               - (2.0 * nu + 1.0) * math.log(2.0) - math.lgamma(n + 1.0)
               - math.log(n + nu + 1.0) - 2.0 * math.lgamma(nu + 1.0))
    return math.exp(log_val)


def gauss_jacobi(npts: int, alpha: float, beta: float | None = None):
    """Nodes and weights for the weight (1-x)^alpha (1+x)^beta on [-1, 1]."""
    if beta is None:
        beta = alpha
    x, w = special.roots_jacobi(npts, alpha, beta)
    return x, w
