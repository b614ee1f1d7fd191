"""Internal and external peanut harmonics and the series built from them.

For coordinate modulus k the separated solutions use Lamé-Wangerin modes of
degree nu = |m| - 1/2 with equation modulus kappa = k':

    G_m^n = R^(-1/2) W(is) W(t) e^(im phi),    H_m^n = R^(-1/2) W(2iK - is) W(t) e^(im phi).

W(is) = i^p U~(s) with p = n mod 2 and U~ real; the Wronskian of the
complex pair is (-1)^p times the real one, so every quotient G H / w is
evaluated exactly with real arithmetic.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import interpolate

from . import lame
from .elliptic import Modulus, jacobi_sn_cn_dn
from .flatring import (CartesianPoint, FlatRingCoords, PeanutRegion, as_modulus,
                       from_cartesian_array, meridian, region_classify)
from .specfun import gauss_jacobi, legendre_q

__all__ = [
    "PeanutHarmonicIndex",
    "TruncationSpec",
    "PreconditionError",
    "ConvergenceWarning",
    "QuadratureWarning",
    "mode_for",
    "wronskian_real",
    "internal_g",
    "external_h",
    "internal_g_xyz",
    "external_h_xyz",
    "chi",
    "chi_cartesian",
    "expand_inverse_distance",
    "azimuthal_fourier",
    "BoundarySamples",
    "dirichlet_coefficients",
    "dirichlet_solve",
    "weak_boundary_distance",
    "external_from_integral",
    "write_coefficients",
    "read_coefficients",
    "read_boundary_csv",
]


class PreconditionError(ValueError):
    pass


class ConvergenceWarning(RuntimeWarning):
    pass


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PeanutHarmonicIndex:
    m: int
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")

    @property
    def nu(self) -> float:
        return abs(self.m) - 0.5


@dataclass(frozen=True)
class TruncationSpec:
    m_max: int = 12
    n_max: int = 25
    tol: float = 1e-12

    def __post_init__(self):
        if self.m_max < 0 or self.n_max < 0 or not self.tol > 0:
            raise ValueError("truncation limits must be non-negative and tol positive")


def mode_for(m: int, n: int, k) -> lame.LameMode:
    mod = as_modulus(k)
    return lame.get_mode(abs(m) - 0.5, n, mod.k_prime)


_WRONSKIANS: dict[tuple, float] = {}


def wronskian_real(mode: lame.LameMode) -> float:
    pr = mode.problem
    key = (pr.nu, pr.n, pr.kappa.k, mode.lam)
    w = _WRONSKIANS.get(key)
    if w is None:
        w = _WRONSKIANS[key] = lame.wronskian(mode)
    return w


def _phase(n: int) -> complex:
    return 1.0 if n % 2 == 0 else 1j


def internal_g(idx: PeanutHarmonicIndex, c: FlatRingCoords) -> complex:
    mode = mode_for(idx.m, idx.n, c.modulus)
    r, _ = meridian(c.s, c.t, c.modulus)
    val = mode.u_tilde(c.s) * float(mode.w(c.t)) / math.sqrt(r)
    return _phase(idx.n) * val * complex(math.cos(idx.m * c.phi), math.sin(idx.m * c.phi))


def external_h(idx: PeanutHarmonicIndex, c: FlatRingCoords) -> complex:
    mod = c.modulus
    mode = mode_for(idx.m, idx.n, mod)
    r, _ = meridian(c.s, c.t, mod)
    val = mode.u_tilde(2.0 * mod.big_k - c.s) * float(mode.w(c.t)) / math.sqrt(r)
    return _phase(idx.n) * val * complex(math.cos(idx.m * c.phi), math.sin(idx.m * c.phi))


def _harmonic_xyz(m, n, k, points, external):
    mod = as_modulus(k)
    s, t, phi = from_cartesian_array(points, mod)
    mode = mode_for(m, n, mod)
    r, _ = meridian(s, t, mod)
    arg = 2.0 * mod.big_k - s if external else s
    val = mode.u_tilde(arg) * mode.w(t) / np.sqrt(r)
    return _phase(n) * val * np.exp(1j * m * phi)


def internal_g_xyz(m: int, n: int, k, points) -> np.ndarray:
    """G_m^n at Cartesian points, shape (N, 3)."""
    return _harmonic_xyz(m, n, k, points, external=False)


def external_h_xyz(m: int, n: int, k, points) -> np.ndarray:
    return _harmonic_xyz(m, n, k, points, external=True)


def chi(s, t, s_star, t_star, k):
    """Toroidal argument from the elliptic-product form (real for real coordinates)."""
    mod = as_modulus(k)
    kk, kp = mod.k, mod.k_prime
    sn, cn, dn = jacobi_sn_cn_dn(s, kk)
    sn2, cn2, dn2 = jacobi_sn_cn_dn(s_star, kk)
    su, cu, du = jacobi_sn_cn_dn(t, kp)
    su2, cu2, du2 = jacobi_sn_cn_dn(t_star, kp)
    # sn(it)sn(it*) = -sc sc*, cn(it) = nc, dn(it) = dc (modulus k' on the right)
    return (-kk * kk * sn * sn2 * (su / cu) * (su2 / cu2)
            - (kk / kp) ** 2 * cn * cn2 / (cu * cu2)
            + dn * dn2 * du * du2 / (kp * kp * cu * cu2))


def chi_cartesian(s, t, s_star, t_star, k):
    r, z = meridian(s, t, k)
    r2, z2 = meridian(s_star, t_star, k)
    return (r * r + r2 * r2 + (z - z2) ** 2) / (2.0 * r * r2)


def _geometric_tail(mags) -> float:
    """Geometric extrapolation of the remaining sum from the last few magnitudes."""
    a = np.asarray(mags[-4:], dtype=float)
    if a.size < 2 or a.max() == 0.0:
        return 0.0
    half = a.size // 2
    # envelope ratio, robust to isolated small terms from parity zeros
    head, tail = a[:half].max(), a[half:].max()
    q = (tail / head) ** (1.0 / half) if head > 0 else 1.0
    if q >= 1.0:
        return float(a.max())
    return float(tail * q / (1.0 - q))


def expand_inverse_distance(c: FlatRingCoords, c_star: FlatRingCoords,
                            trunc: TruncationSpec = TruncationSpec(),
                            complex_path: bool = False):
    """Partial double sum of the peanut expansion of 1/|r - r*| (needs s < s*).

    Returns (value, terms_used, tail_estimate) with the tail estimate relative
    to the value.  ``complex_path`` keeps the full complex phases, for checking
    that they cancel.
    """
    if not c.s < c_star.s:
        raise PreconditionError("expansion needs s < s*")
    mod = c.modulus
    big_k = mod.big_k
    r, _ = meridian(c.s, c.t, mod)
    r2, _ = meridian(c_star.s, c_star.t, mod)
    pref = 2.0 / math.sqrt(r * r2)
    dphi = c.phi - c_star.phi
    total = 0.0 + 0.0j
    used = 0
    tails = []
    m_mags = []
    for m in range(trunc.m_max + 1):
        sub = 0.0 + 0.0j
        mags = []
        small = 0
        for n in range(trunc.n_max + 1):
            mode = mode_for(m, n, mod)
            wt = float(mode.w(c.t)) * float(mode.w(c_star.t))
            if complex_path:
                w_c = (-1) ** (n % 2) * wronskian_real(mode)
                ph = _phase(n)
                g = ph * mode.u_tilde(c.s)
                h = ph * mode.u_tilde(2.0 * big_k - c_star.s)
                term = sum(g * h * wt / w_c * np.exp(1j * mm * dphi) for mm in {m, -m})
            else:
                term = (mode.u_tilde(c.s) * mode.u_tilde(2.0 * big_k - c_star.s) * wt
                        / wronskian_real(mode)) * (1.0 if m == 0 else 2.0 * math.cos(m * dphi))
            term = pref * term
            used += 1 if m == 0 else 2
            sub += term
            mags.append(abs(term) if m == 0 or complex_path else
                        abs(term) / max(abs(math.cos(m * dphi)), 1e-300))
            if mags[-1] < trunc.tol * max(abs(total + sub), 1e-300):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        total += sub
        tails.append(_geometric_tail(mags))
        m_mags.append(max(mags))
        if m >= 2 and all(x < trunc.tol * abs(total) for x in m_mags[-3:]):
            break
    value = total.real
    if abs(total.imag) > 1e-12 * abs(total):
        raise lame.LameError(f"expansion not real: imaginary part {total.imag:.3e}")
    tail = (sum(tails) + _geometric_tail(m_mags)) / abs(value)
    if tail > 10.0 * trunc.tol:
        warnings.warn(f"expansion tail estimate {tail:.2e} exceeds 10*tol", ConvergenceWarning,
                      stacklevel=2)
    return value, used, tail


def azimuthal_fourier(c: FlatRingCoords, c_star: FlatRingCoords, m_max: int) -> np.ndarray:
    """Coefficients Q_{m-1/2}(chi) / (pi sqrt(R R*)), m = 0..m_max.

    1/|r - r*| = a_0 + 2 sum_{m>=1} a_m cos(m (phi - phi*)).
    """
    mod = c.modulus
    x = float(chi(c.s, c.t, c_star.s, c_star.t, mod))
    if not x > 1.0:
        raise PreconditionError("points coincide (chi <= 1)")
    r, _ = meridian(c.s, c.t, mod)
    r2, _ = meridian(c_star.s, c_star.t, mod)
    scale = 1.0 / (math.pi * math.sqrt(r * r2))
    return np.array([scale * legendre_q(m - 0.5, x) for m in range(m_max + 1)])


# -- Dirichlet problem --------------------------------------------------------


@dataclass
class BoundarySamples:
    """g(t, phi) sampled on a uniform product grid; values complex (n_t, n_phi)."""

    t: np.ndarray
    phi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.values = np.asarray(self.values, dtype=complex).reshape(self.t.size, self.phi.size)
        # periodic padding in phi so the spline covers [-pi, pi]
        ph = np.concatenate([self.phi[-3:] - 2 * np.pi, self.phi, self.phi[:3] + 2 * np.pi])
        v = np.concatenate([self.values[:, -3:], self.values, self.values[:, :3]], axis=1)
        self._re = interpolate.RectBivariateSpline(self.t, ph, v.real, kx=3, ky=3)
        self._im = interpolate.RectBivariateSpline(self.t, ph, v.imag, kx=3, ky=3)

    def __call__(self, t, phi):
        tt, pp = np.broadcast_arrays(t, phi)
        pp = (pp + np.pi) % (2 * np.pi) - np.pi
        return self._re.ev(tt, pp) + 1j * self._im.ev(tt, pp)


def read_boundary_csv(path) -> BoundarySamples:
    """Read rows (t, phi, re_g, im_g) on a product grid."""
    rows = []
    with open(path) as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            rows.append((float(row["t"]), float(row["phi"]), float(row["re_g"]), float(row["im_g"])))
    arr = np.array(rows)
    t = np.unique(arr[:, 0])
    phi = np.unique(arr[:, 1])
    vals = np.full((t.size, phi.size), np.nan, dtype=complex)
    it = np.searchsorted(t, arr[:, 0])
    ip = np.searchsorted(phi, arr[:, 1])
    vals[it, ip] = arr[:, 2] + 1j * arr[:, 3]
    if np.isnan(vals.real).any():
        raise ValueError("boundary samples do not form a full product grid")
    return BoundarySamples(t, phi, vals)


def _coefficients(g, region, trunc, n_t, n_phi):
    mod = region.modulus
    big_kp = mod.big_k_prime
    phi = -np.pi + 2.0 * np.pi * np.arange(n_phi) / n_phi
    out = {}
    for am in range(trunc.m_max + 1):
        nu = am - 0.5
        alpha = nu + 1.5
        x, wq = gauss_jacobi(n_t, alpha)
        t = big_kp * x
        # undo the Jacobi weight; it is part of the integrand
        wt = wq * big_kp / (1.0 - x * x) ** alpha
        gv = np.asarray(g(t[:, None], phi[None, :]), dtype=complex)
        for m in {am, -am}:
            four = (gv * np.exp(-1j * m * phi)).sum(axis=1) * (2.0 * np.pi / n_phi)
            for n in range(trunc.n_max + 1):
                mode = mode_for(m, n, mod)
                integral = (wt * mode.w(t) * four).sum()
                w_s0 = _phase(n) * mode.u_tilde(region.s0)
                out[(m, n)] = complex(integral / (2.0 * np.pi * w_s0))
    return out


def dirichlet_coefficients(boundary_g, region: PeanutRegion,
                           trunc: TruncationSpec = TruncationSpec(4, 20),
                           n_t: int = 64, n_phi: int = 64, check: bool = True) -> dict:
    """Expansion coefficients c_m^n of boundary data g = sqrt(R) f on s = s0.

    ``boundary_g`` is a vectorised callable g(t, phi) or a BoundarySamples grid.
    Returns {(m, n): complex}.
    """
    coeffs = _coefficients(boundary_g, region, trunc, n_t, n_phi)
    if check:
        fine = _coefficients(boundary_g, region, trunc, 2 * n_t, 2 * n_phi)
        worst = max(abs(fine[key] - coeffs[key]) for key in coeffs)
        if worst > 1e-6:
            warnings.warn(f"coefficients changed by {worst:.2e} under node doubling",
                          QuadratureWarning, stacklevel=2)
        coeffs = fine
    return coeffs


def dirichlet_solve(coeffs: dict, region: PeanutRegion, c: FlatRingCoords, tol: float = 1e-14) -> complex:
    """u(r) = sum c_m^n G_m^n(r) inside the peanut (s < s0)."""
    if not c.s < region.s0:
        raise PreconditionError("dirichlet_solve needs s < s0")
    total = 0.0 + 0.0j
    for (m, n), cmn in sorted(coeffs.items()):
        if cmn == 0:
            continue
        total += cmn * internal_g(PeanutHarmonicIndex(m, n), c)
    return total


def _solve_grid(coeffs, mod, s, t, phi):
    r, _ = meridian(s, t, mod)
    total = np.zeros(np.broadcast(t, phi).shape, dtype=complex)
    for (m, n), cmn in coeffs.items():
        if cmn == 0:
            continue
        mode = mode_for(m, n, mod)
        total += cmn * _phase(n) * mode.u_tilde(s) * mode.w(t) * np.exp(1j * m * phi)
    return total / np.sqrt(r)


def weak_boundary_distance(coeffs: dict, region: PeanutRegion, boundary_g, s1: float,
                           n_t: int = 96, n_phi: int = 64) -> float:
    """L2 distance on the (t, phi) rectangle between sqrt(R) u(s1, ., .) and g."""
    mod = region.modulus
    if not 0.0 < s1 < region.s0:
        raise PreconditionError("need 0 < s1 < s0")
    x, wq = gauss_jacobi(n_t, 0.0)
    t = mod.big_k_prime * x
    phi = -np.pi + 2.0 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = t[:, None], phi[None, :]
    r1, _ = meridian(s1, tt, mod)
    diff = np.sqrt(r1) * _solve_grid(coeffs, mod, s1, tt, pp) - boundary_g(tt, pp)
    val = (np.abs(diff) ** 2).sum(axis=1) * (2.0 * np.pi / n_phi)
    return float(math.sqrt((wq * mod.big_k_prime * val).sum()))


def external_from_integral(idx: PeanutHarmonicIndex, region: PeanutRegion, p_star: CartesianPoint,
                           n_t: int = 96, n_phi: int = 128) -> complex:
    """H_m^n(p*) from the surface integral of G_m^n / (h |r - r*|) over s = s0."""
    if region_classify(p_star, region) != "exterior":
        raise PreconditionError("p* must lie outside the closed peanut")
    mod = region.modulus
    mode = mode_for(idx.m, idx.n, mod)
    alpha = idx.nu + 1.5
    x, wq = gauss_jacobi(n_t, alpha)
    t = mod.big_k_prime * x
    wt = wq * mod.big_k_prime / (1.0 - x * x) ** alpha
    phi = -np.pi + 2.0 * np.pi * np.arange(n_phi) / n_phi
    r, z = meridian(region.s0, t, mod)
    tt = t[:, None]
    rr, zz = r[:, None], z[:, None]
    dist = np.sqrt((rr * np.cos(phi) - p_star.x) ** 2 + (rr * np.sin(phi) - p_star.y) ** 2
                   + (zz - p_star.z) ** 2)
    # dS / h = R dt dphi, and G carries R^(-1/2)
    integrand = np.sqrt(rr) * mode.w(tt) * np.exp(1j * idx.m * phi) / dist
    integral = (wt[:, None] * integrand).sum() * (2.0 * np.pi / n_phi)
    u0 = mode.u_tilde(region.s0)
    # w / W(is0)^2 times the phase i^p of G: the complex factors reduce to i^p w~ / U~(s0)^2
    return complex(_phase(idx.n) * wronskian_real(mode) * u0 * integral / (4.0 * np.pi * u0 * u0))


# -- serialisation ------------------------------------------------------------


def write_coefficients(path, coeffs: dict) -> None:
    rows = [{"m": m, "n": n, "re": v.real, "im": v.imag} for (m, n), v in sorted(coeffs.items())]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=1)


def read_coefficients(path) -> dict:
    with open(path) as fh:
        rows = json.load(fh)
    return {(int(r["m"]), int(r["n"])): complex(r["re"], r["im"]) for r in rows}
