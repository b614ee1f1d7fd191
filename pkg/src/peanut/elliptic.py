"""Complete elliptic integrals and Jacobian elliptic functions of real argument.

K(k) comes from the arithmetic-geometric mean; sn, cn, dn from the descending
Landen transformation after reducing the argument into [0, K/2].  Imaginary
arguments are handled through Jacobi's imaginary transformation and returned
as a real magnitude plus a flag, never as complex numbers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "EllipticDomainError",
    "PoleError",
    "Modulus",
    "complete_K",
    "jacobi_sn_cn_dn",
    "sn_cn_dn",
    "glaisher",
    "imag_transform",
]

#: moduli closer than this to 0 or 1 are clamped
CLAMP = 1e-12
_AGM_TOL = 1e-15


class EllipticDomainError(ValueError):
    pass


class PoleError(ZeroDivisionError):
    pass


def _check_k(k: float) -> float:
    k = float(k)
    if not (0.0 < k < 1.0) or math.isnan(k):
        raise EllipticDomainError(f"modulus must lie in (0, 1), got {k!r}")
    if k < CLAMP:
        warnings.warn(f"modulus {k!r} clamped to {CLAMP}", RuntimeWarning, stacklevel=3)
        return CLAMP
    if k > 1.0 - CLAMP:
        warnings.warn(f"modulus {k!r} clamped to 1-{CLAMP}", RuntimeWarning, stacklevel=3)
        return 1.0 - CLAMP
    return k


def _complement(k: float) -> float:
    # (1-k)(1+k) avoids cancellation for k near 1
    return math.sqrt((1.0 - k) * (1.0 + k))


def _agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= _AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_K(k: float) -> float:
    """Quarter period K(k) = pi / (2 M(1, k'))."""
    k = _check_k(k)
    return math.pi / (2.0 * _agm(1.0, _complement(k)))


@lru_cache(maxsize=256)
def _landen_table(k: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    a, b, c = [1.0], [_complement(k)], [k]
    while c[-1] > 1e-16 * a[-1] and len(a) < 40:
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(math.sqrt(an * bn))
        c.append(0.5 * (an - bn))
    return tuple(a), tuple(c)


@dataclass(frozen=True)
class Modulus:
    """An elliptic modulus with its derived constants."""

    k: float
    k_prime: float = field(init=False)
    big_k: float = field(init=False)
    big_k_prime: float = field(init=False)
    omega: float = field(init=False)

    def __post_init__(self):
        k = _check_k(self.k)
        object.__setattr__(self, "k", k)
        kp = _complement(k)
        object.__setattr__(self, "k_prime", kp)
        object.__setattr__(self, "big_k", math.pi / (2.0 * _agm(1.0, kp)))
        object.__setattr__(self, "big_k_prime", math.pi / (2.0 * _agm(1.0, k)))
        object.__setattr__(self, "omega", math.pi / (2.0 * self.big_k))

    def complement(self) -> "Modulus":
        return Modulus(self.k_prime)

    def sn_cn_dn(self, u):
        return jacobi_sn_cn_dn(u, self.k)


def _core_scalar(u: float, k: float, kp: float) -> tuple[float, float, float]:
    # u in [0, K/2]
    a, c = _landen_table(k)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + math.asin(c[j] * math.sin(phi) / a[j]))
    s, cc = math.sin(phi), math.cos(phi)
    return s, cc, math.sqrt(kp * kp + k * k * cc * cc)


def sn_cn_dn(u: float, k: float, big_k: float | None = None) -> tuple[float, float, float]:
    """Scalar fast path of :func:`jacobi_sn_cn_dn` (no domain checks)."""
    kp = _complement(k)
    if big_k is None:
        big_k = math.pi / (2.0 * _agm(1.0, kp))
    u = math.fmod(u, 4.0 * big_k)
    if u < 0.0:
        u += 4.0 * big_k
    ssn = scn = 1.0
    if u >= 2.0 * big_k:
        u -= 2.0 * big_k
        ssn = scn = -1.0
    if u > big_k:
        u = 2.0 * big_k - u
        scn = -scn
    if u > 0.5 * big_k:
        v = big_k - u
        s, c, d = _core_scalar(v, k, kp)
        return ssn * c / d, scn * kp * s / d, kp / d
    s, c, d = _core_scalar(u, k, kp)
    return ssn * s, scn * c, d


def _core_vec(u: np.ndarray, k: float, kp: float):
    a, c = _landen_table(k)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] * np.sin(phi) / a[j]))
    s, cc = np.sin(phi), np.cos(phi)
    return s, cc, np.sqrt(kp * kp + k * k * cc * cc)


def jacobi_sn_cn_dn(u, k: float):
    """Return (sn, cn, dn) at real u (scalar or array) for modulus k.

    The argument is reduced modulo 4K and folded into [0, K/2] so that cn
    keeps full relative accuracy near its zeros.
    """
    k = _check_k(k)
    kp = _complement(k)
    big_k = math.pi / (2.0 * _agm(1.0, kp))
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise EllipticDomainError("argument must be finite")
    u = np.mod(u, 4.0 * big_k)
    ssn = np.where(u >= 2.0 * big_k, -1.0, 1.0)
    u = np.where(u >= 2.0 * big_k, u - 2.0 * big_k, u)
    scn = ssn.copy()
    upper = u > big_k
    u = np.where(upper, 2.0 * big_k - u, u)
    scn = np.where(upper, -scn, scn)
    far = u > 0.5 * big_k
    w = np.where(far, big_k - u, u)
    s, c, d = _core_vec(w, k, kp)
    sn = ssn * np.where(far, c / d, s)
    cn = scn * np.where(far, kp * s / d, c)
    dn = np.where(far, kp / d, d)
    if scalar:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


_GLAISHER = {
    "sn": ("s", "n"), "cn": ("c", "n"), "dn": ("d", "n"),
    "ns": ("n", "s"), "nc": ("n", "c"), "nd": ("n", "d"),
    "sc": ("s", "c"), "cs": ("c", "s"), "sd": ("s", "d"),
    "ds": ("d", "s"), "cd": ("c", "d"), "dc": ("d", "c"),
}


def glaisher(code: str, u, k: float):
    """Glaisher quotient pq(u, k) = pn(u, k) / qn(u, k), e.g. dc = dn / cn."""
    try:
        p, q = _GLAISHER[code]
    except KeyError:
        raise ValueError(f"unknown Glaisher code {code!r}") from None
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    parts = {"s": sn, "c": cn, "d": dn, "n": np.ones_like(np.asarray(sn, dtype=float))}
    den = parts[q]
    if np.any(np.abs(den) < 1e-13):
        raise PoleError(f"{code}({u}, {k}) is at a pole")
    out = parts[p] / den
    return float(out) if np.ndim(out) == 0 else out


def imag_transform(fn: str, t, k: float):
    """Evaluate sn, cn or dn at the imaginary argument i*t.

    Returns ``(value, is_imaginary)``:  sn(it, k) = i sc(t, k'),
    cn(it, k) = nc(t, k'), dn(it, k) = dc(t, k').
    """
    kp = _complement(_check_k(k))
    code = {"sn": "sc", "cn": "nc", "dn": "dc"}.get(fn)
    if code is None:
        raise ValueError(f"fn must be one of sn, cn, dn; got {fn!r}")
    return glaisher(code, t, kp), fn == "sn"
