"""Flat-ring cyclide coordinates (s, t, phi) and peanut-shaped regions.

With coordinate modulus k, s in (0, 2K(k)), t in (-K'(k), K'(k)) and the
t-dependence written through modulus k' (Jacobi's imaginary transformation):

    R = k' cn(t,k') / (k cn(s,k) + dn(s,k) dn(t,k'))
    z = k k' sn(s,k) sn(t,k') / (k cn(s,k) + dn(s,k) dn(t,k'))

s = K is the unit sphere and s -> 2K - s is inversion in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elliptic import Modulus, jacobi_sn_cn_dn

__all__ = [
    "FlatRingCoords",
    "CartesianPoint",
    "PeanutRegion",
    "DomainError",
    "ConvergenceError",
    "as_modulus",
    "meridian",
    "to_cartesian",
    "to_cartesian_array",
    "from_cartesian_array",
    "omega_scaled",
    "mesh_area",
    "from_cartesian",
    "b_param",
    "omega_surface",
    "invert_sphere",
    "region_classify",
    "scale_h",
    "surface_mesh",
    "write_obj",
    "write_mesh_csv",
    "coordinate_lines",
]


class DomainError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def as_modulus(k) -> Modulus:
    return k if isinstance(k, Modulus) else Modulus(float(k))


@dataclass(frozen=True)
class FlatRingCoords:
    s: float
    t: float
    phi: float
    modulus: Modulus

    def __post_init__(self):
        mod = as_modulus(self.modulus)
        object.__setattr__(self, "modulus", mod)
        if not 0.0 < self.s < 2.0 * mod.big_k:
            raise DomainError(f"s={self.s} outside (0, 2K)")
        if not -mod.big_k_prime < self.t < mod.big_k_prime:
            raise DomainError(f"t={self.t} outside (-K', K')")


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float

    @property
    def cyl_r(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class PeanutRegion:
    s0: float
    modulus: Modulus

    def __post_init__(self):
        mod = as_modulus(self.modulus)
        object.__setattr__(self, "modulus", mod)
        if not 0.0 < self.s0 < 2.0 * mod.big_k:
            raise DomainError(f"s0={self.s0} outside (0, 2K)")


def _jac_t(t, mod: Modulus):
    return jacobi_sn_cn_dn(t, mod.k_prime)


def meridian(s, t, k):
    """(R, z) in the meridian half-plane; vectorised over s and t."""
    mod = as_modulus(k)
    sn, cn, dn = jacobi_sn_cn_dn(s, mod.k)
    su, cu, du = _jac_t(t, mod)
    den = mod.k * cn + dn * du
    return mod.k_prime * cu / den, mod.k * mod.k_prime * sn * su / den


def _meridian_jac(s, t, mod: Modulus):
    k, kp = mod.k, mod.k_prime
    sn, cn, dn = jacobi_sn_cn_dn(s, k)
    su, cu, du = _jac_t(t, mod)
    den = k * cn + dn * du
    r = kp * cu / den
    z = k * kp * sn * su / den
    dden_s = -k * sn * dn - k * k * sn * cn * du
    dden_t = -dn * kp * kp * su * cu
    r_s = -r * dden_s / den
    r_t = -kp * su * du / den - r * dden_t / den
    z_s = k * kp * cn * dn * su / den - z * dden_s / den
    z_t = k * kp * sn * cu * du / den - z * dden_t / den
    return r, z, r_s, r_t, z_s, z_t


def to_cartesian(c: FlatRingCoords) -> CartesianPoint:
    r, z = meridian(c.s, c.t, c.modulus)
    return CartesianPoint(r * math.cos(c.phi), r * math.sin(c.phi), z)


def to_cartesian_array(s, t, phi, k) -> np.ndarray:
    """Vectorised forward map, returns an (..., 3) array."""
    r, z = meridian(s, t, k)
    return np.stack([r * np.cos(phi), r * np.sin(phi), np.broadcast_to(z, np.shape(r))], axis=-1)


def b_param(k) -> float:
    """Inner radius b = (1-k)/k' of the cut disk; 1/b is the outer one."""
    mod = as_modulus(k)
    return (1.0 - mod.k) / mod.k_prime


@lru_cache(maxsize=32)
def _start_grid(k: float):
    mod = Modulus(k)
    # inside the unit ball s <= K, so the grid only needs that half
    s = mod.big_k * (np.arange(32) + 0.5) / 32
    t = mod.big_k_prime * (2.0 * (np.arange(32) + 0.5) / 32 - 1.0)
    ss, tt = np.meshgrid(s, t, indexing="ij")
    r, z = meridian(ss.ravel(), tt.ravel(), mod)
    return ss.ravel(), tt.ravel(), r, z


def _newton(r0, z0, mod: Modulus, max_steps: int = 80, tol: float = 1e-12):
    gs, gt, gr, gz = _start_grid(mod.k)
    d2 = (r0[:, None] - gr) ** 2 + (z0[:, None] - gz) ** 2
    idx = np.argmin(d2, axis=1)
    s, t = gs[idx].copy(), gt[idx].copy()
    big_k, big_kp = mod.big_k, mod.big_k_prime
    done = np.zeros(r0.size, dtype=bool)
    for _ in range(max_steps):
        r, z, rs, rt, zs, zt = _meridian_jac(s, t, mod)
        fr, fz = r - r0, z - z0
        res = np.hypot(fr, fz)
        done = res < tol
        if np.all(done):
            break
        det = rs * zt - rt * zs
        ds = (zt * fr - rt * fz) / det
        dt = (-zs * fr + rs * fz) / det
        step = np.ones_like(s)
        # damp steps that would leave the chart
        for _ in range(30):
            sn_, tn_ = s - step * ds, t - step * dt
            bad = (sn_ <= 0) | (sn_ >= 2 * big_k) | (np.abs(tn_) >= big_kp)
            if not np.any(bad):
                break
            step = np.where(bad, 0.5 * step, step)
        rn, zn = meridian(s - step * ds, t - step * dt, mod)
        worse = np.hypot(rn - r0, zn - z0) > res
        step = np.where(worse & ~done, 0.5 * step, step)
        step = np.where(done, 0.0, step)
        s, t = s - step * ds, t - step * dt
    # polish: far points come from near-origin images, so squeeze rounding level
    for _ in range(2):
        r, z, rs, rt, zs, zt = _meridian_jac(s, t, mod)
        fr, fz = r - r0, z - z0
        det = rs * zt - rt * zs
        s1 = s - (zt * fr - rt * fz) / det
        t1 = t - (-zs * fr + rs * fz) / det
        rn, zn = meridian(s1, t1, mod)
        better = np.hypot(rn - r0, zn - z0) < np.hypot(fr, fz)
        s, t = np.where(better, s1, s), np.where(better, t1, t)
    return s, t, done


def from_cartesian_array(points, k):
    """Vectorised inverse map; points is an (N, 3) array. Returns s, t, phi."""
    mod = as_modulus(k)
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    rho = np.hypot(x, y)
    if np.any(rho < 1e-10):
        raise DomainError("point on the z-axis, where the chart degenerates")
    b = b_param(mod)
    on_plane = np.abs(z) < 1e-10
    if np.any(on_plane & ((rho <= b + 1e-10) | (rho >= 1.0 / b - 1e-10))):
        raise DomainError("point on a cut disk of the flat-ring chart")
    phi = np.arctan2(y, x)
    nrm2 = rho ** 2 + z ** 2
    outside = nrm2 > 1.0
    # Kelvin-reduce into the closed unit ball, then s -> 2K - s
    rr = np.where(outside, rho / nrm2, rho)
    zz = np.where(outside, z / nrm2, z)
    s, t, ok = _newton(rr, zz, mod)
    if not np.all(ok):
        raise ConvergenceError(f"inverse map did not converge at {np.count_nonzero(~ok)} points")
    s = np.where(outside, 2.0 * mod.big_k - s, s)
    return s, t, phi


def from_cartesian(p: CartesianPoint, k) -> FlatRingCoords:
    mod = as_modulus(k)
    s, t, phi = from_cartesian_array(p.as_array()[None, :], mod)
    return FlatRingCoords(float(s[0]), float(t[0]), float(phi[0]), mod)


def _omega_terms(norm2, z, region: PeanutRegion):
    mod = region.modulus
    if abs(region.s0 - mod.big_k) < 1e-10:
        raise DomainError("Omega is undefined on the sphere s0 = K")
    sn, cn, dn = jacobi_sn_cn_dn(region.s0, mod.k)
    return (mod.k ** 2 * (norm2 + 1.0) ** 2 / dn ** 2,
            -(norm2 - 1.0) ** 2 / cn ** 2,
            4.0 * z ** 2 / sn ** 2)


def omega_surface(p: CartesianPoint, region: PeanutRegion) -> float:
    """Quartic whose zero set contains the coordinate surface s = s0."""
    return float(sum(_omega_terms(p.norm ** 2, p.z, region)))


def omega_scaled(p: CartesianPoint, region: PeanutRegion) -> float:
    """Omega divided by the magnitude of its largest term."""
    terms = _omega_terms(p.norm ** 2, p.z, region)
    return float(sum(terms) / max(abs(x) for x in terms))


def invert_sphere(p: CartesianPoint) -> CartesianPoint:
    n2 = p.x ** 2 + p.y ** 2 + p.z ** 2
    if n2 == 0.0:
        raise DomainError("cannot invert the origin")
    return CartesianPoint(p.x / n2, p.y / n2, p.z / n2)


def region_classify(p: CartesianPoint, region: PeanutRegion, tol: float = 1e-8) -> str:
    """interior / boundary / exterior of the peanut bounded by s = s0."""
    mod = region.modulus
    n2 = p.norm ** 2
    if abs(region.s0 - mod.big_k) < 1e-10:
        d = math.sqrt(n2) - 1.0
        if abs(d) < tol:
            return "boundary"
        return "interior" if d < 0 else "exterior"
    om = omega_scaled(p, region)
    if abs(om) < tol:
        return "boundary"
    if region.s0 < mod.big_k:
        return "interior" if (n2 < 1.0 and om < 0) else "exterior"
    return "interior" if (n2 <= 1.0 or om > 0) else "exterior"


def scale_h(s, t, k):
    """h = k R (sn^2(s,k) + sc^2(t,k'))^(1/2); the surface element of s = const is h R dt dphi."""
    mod = as_modulus(k)
    r, _ = meridian(s, t, mod)
    sn = jacobi_sn_cn_dn(s, mod.k)[0]
    su, cu, _ = _jac_t(t, mod)
    return mod.k * r * np.sqrt(sn ** 2 + (su / cu) ** 2)


# -- figure data ------------------------------------------------------------


def _arc_length_nodes(mod: Modulus, s0: float, n: int, fine: int = 4000) -> np.ndarray:
    """Interior t-nodes splitting the meridian s = s0 into n equal arcs."""
    kp = mod.big_k_prime
    tf = kp * np.linspace(-1.0, 1.0, fine + 1)
    tf[0], tf[-1] = -kp * (1 - 1e-12), kp * (1 - 1e-12)
    h = scale_h(np.full_like(tf, s0), tf, mod)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (h[1:] + h[:-1]) * np.diff(tf))])
    return np.interp(arc[-1] * np.arange(1, n) / n, arc, tf)


def surface_mesh(k, s0: float, n_t: int = 64, n_phi: int = 96):
    """Closed mesh of the surface s = s0: vertices and faces (0-based).

    Rings at interior t-values are joined by quads; the two poles on the
    z-axis (t = +-K') are single vertices fanned by triangles.  Rings are
    spaced evenly in meridian arc length.
    """
    mod = as_modulus(k)
    if not 0.0 < s0 < 2.0 * mod.big_k:
        raise DomainError("s0 must lie in (0, 2K)")
    if n_t < 2 or n_phi < 3:
        raise ValueError("mesh resolution too small")
    kp = mod.big_k_prime
    t = _arc_length_nodes(mod, s0, n_t)
    phi = -math.pi + 2.0 * math.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    ring = to_cartesian_array(np.full_like(tt, s0), tt, pp, mod).reshape(-1, 3)
    # the poles: R = 0, z from the limit t -> -+K'
    sn, cn, dn = jacobi_sn_cn_dn(s0, mod.k)
    # sn(K',k') = 1 and dn(K',k') = k at the poles
    z_pole = mod.k_prime * sn / (cn + dn)
    verts = np.vstack([[0.0, 0.0, -z_pole], ring, [0.0, 0.0, z_pole]])
    south, north = 0, verts.shape[0] - 1
    rows = t.size

    def vid(i, j):
        return 1 + i * n_phi + (j % n_phi)

    faces = []
    for j in range(n_phi):
        faces.append((south, vid(0, j + 1), vid(0, j)))
    for i in range(rows - 1):
        for j in range(n_phi):
            faces.append((vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)))
    for j in range(n_phi):
        faces.append((north, vid(rows - 1, j), vid(rows - 1, j + 1)))
    params = np.vstack([[s0, -kp, 0.0], np.column_stack([np.full(tt.size, s0), tt.ravel(), pp.ravel()]),
                        [s0, kp, 0.0]])
    return verts, faces, params


def mesh_area(verts, faces) -> float:
    verts = np.asarray(verts, dtype=float)
    groups = {}
    for f in faces:
        groups.setdefault(len(f), []).append(f)
    area = 0.0
    for size, fs in groups.items():
        p = verts[np.asarray(fs)]
        for j in range(1, size - 1):
            area += 0.5 * np.linalg.norm(np.cross(p[:, j] - p[:, 0], p[:, j + 1] - p[:, 0]), axis=1).sum()
    return float(area)


def write_obj(path, verts, faces, header: str = "") -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        for v in verts:
            fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
        for f in faces:
            fh.write("f " + " ".join(str(i + 1) for i in f) + "\n")


def write_mesh_csv(path, verts, params, header: str = "") -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write("s0,t,phi,x,y,z\n")
        for (s0, t, phi), v in zip(params, verts):
            fh.write(f"{s0:.12g},{t:.12g},{phi:.12g},{v[0]:.12g},{v[1]:.12g},{v[2]:.12g}\n")


def coordinate_lines(k, s_fracs=(0.5, 1.0, 1.5), t_fracs=(-0.7, -0.5, -0.3, 0.3, 0.5, 0.7),
                     npts: int = 400):
    """Polylines in the (R, z) half-plane for fixed s = f K and fixed t = f K'.

    Returns a list of (family, value, R array, z array).
    """
    mod = as_modulus(k)
    big_k, big_kp = mod.big_k, mod.big_k_prime
    out = []
    # open parameter ranges, stopping short of the degenerate ends
    tt = big_kp * np.linspace(-1.0, 1.0, npts + 2)[1:-1]
    for f in s_fracs:
        r, z = meridian(np.full_like(tt, f * big_k), tt, mod)
        out.append(("s", f * big_k, r, z))
    ss = 2.0 * big_k * np.linspace(0.0, 1.0, npts + 2)[1:-1]
    for f in t_fracs:
        r, z = meridian(ss, np.full_like(ss, f * big_kp), mod)
        out.append(("t", f * big_kp, r, z))
    return out
