import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peanut import flatring as fr
from peanut.elliptic import Modulus, jacobi_sn_cn_dn
from peanut.flatring import CartesianPoint, FlatRingCoords, PeanutRegion
from peanut.harmonics import chi, chi_cartesian

ROUND_TRIP_KS = (0.3, 2 ** -0.5, 0.95)


def _random_coords(mod, n, rng, margin=1e-3):
    s = rng.uniform(margin, 2 * mod.big_k - margin, n)
    t = rng.uniform(-1 + margin, 1 - margin, n) * mod.big_k_prime
    phi = rng.uniform(-math.pi, math.pi, n)
    return s, t, phi


def test_coords_validation():
    mod = Modulus(0.6)
    with pytest.raises(fr.DomainError):
        FlatRingCoords(2.5 * mod.big_k, 0.0, 0.0, mod)
    with pytest.raises(fr.DomainError):
        FlatRingCoords(1.0, mod.big_k_prime, 0.0, mod)
    with pytest.raises(fr.DomainError):
        PeanutRegion(0.0, mod)


def test_unit_sphere_surface():
    mod = Modulus(0.6)
    rng = np.random.default_rng(1)
    t = rng.uniform(-0.999, 0.999, 200) * mod.big_k_prime
    phi = rng.uniform(-math.pi, math.pi, 200)
    p = fr.to_cartesian_array(mod.big_k, t, phi, mod)
    assert np.max(np.abs(np.linalg.norm(p, axis=1) - 1)) < 1e-12


def test_pole_approach():
    mod = Modulus(0.6)
    radii = [fr.to_cartesian(FlatRingCoords(1.0, (1 - d) * mod.big_k_prime, 0.3, mod)).cyl_r
             for d in (1e-2, 1e-4, 1e-6)]
    assert radii[0] > radii[1] > radii[2] and radii[2] < 1e-5


def test_b_param():
    assert abs(fr.b_param(0.9) - 1 / math.sqrt(19)) < 1e-14
    for k in (0.1, 0.5, 0.9):
        assert abs(fr.b_param(k) - math.sqrt((1 - k) / (1 + k))) < 1e-14
    assert abs(fr.b_param(1e-12) - 1) < 1e-10
    assert fr.b_param(1 - 1e-12) < 1e-5
    r, _ = fr.meridian(1e-9, 0.0, 0.9)
    assert abs(r - 1 / math.sqrt(19)) < 1e-9


def test_reciprocal_radius_forms():
    mod = Modulus(0.7)
    rng = np.random.default_rng(2)
    s, t, _ = _random_coords(mod, 500, rng)
    r, _ = fr.meridian(s, t, mod)
    sn, cn, dn = jacobi_sn_cn_dn(s, mod.k)
    su, cu, du = jacobi_sn_cn_dn(t, mod.k_prime)
    inv = dn * du / cu / mod.k_prime + mod.k / mod.k_prime * cn / cu
    assert np.max(np.abs(1 / r - inv) * r) < 1e-12


@pytest.mark.parametrize("k", ROUND_TRIP_KS)
def test_round_trip(k):
    mod = Modulus(k)
    rng = np.random.default_rng(7)
    s, t, phi = _random_coords(mod, 10_000, rng)
    p = fr.to_cartesian_array(s, t, phi, mod)
    s2, t2, phi2 = fr.from_cartesian_array(p, mod)
    back = fr.to_cartesian_array(s2, t2, phi2, mod)
    assert np.max(np.linalg.norm(back - p, axis=1)) < 1e-9


def test_round_trip_point_on_sphere():
    c = fr.from_cartesian(CartesianPoint(1.0, 0.0, 0.0), 0.6)
    assert abs(c.s - c.modulus.big_k) < 1e-9
    p = fr.to_cartesian(c)
    assert np.linalg.norm(p.as_array() - [1, 0, 0]) < 1e-9


def test_inverse_rejects_cuts_and_axis():
    k = 0.6
    b = fr.b_param(k)
    with pytest.raises(fr.DomainError):
        fr.from_cartesian(CartesianPoint(b / 2, 0.0, 0.0), k)
    with pytest.raises(fr.DomainError):
        fr.from_cartesian(CartesianPoint(0.0, 2.0 / b, 0.0), k)
    with pytest.raises(fr.DomainError):
        fr.from_cartesian(CartesianPoint(0.0, 0.0, 0.4), k)


def test_omega_on_surface():
    mod = Modulus(0.5)
    rng = np.random.default_rng(3)
    for frac in (0.3, 0.7, 1.4, 1.7):
        region = PeanutRegion(frac * mod.big_k, mod)
        t = rng.uniform(-0.99, 0.99, 100) * mod.big_k_prime
        phi = rng.uniform(-math.pi, math.pi, 100)
        pts = fr.to_cartesian_array(region.s0, t, phi, mod)
        vals = [fr.omega_scaled(CartesianPoint(*p), region) for p in pts]
        assert max(abs(v) for v in vals) < 1e-8


def test_omega_signs():
    mod = Modulus(0.5)
    region = PeanutRegion(0.6 * mod.big_k, mod)
    assert fr.omega_surface(CartesianPoint(0, 0, 0), region) < 0
    assert fr.omega_surface(CartesianPoint(0.6, 0, 0.8), region) > 0
    with pytest.raises(fr.DomainError):
        fr.omega_surface(CartesianPoint(0, 0, 0), PeanutRegion(mod.big_k, mod))


def test_invert_sphere():
    p = CartesianPoint(0.6, 0.0, 0.8)
    assert np.allclose(fr.invert_sphere(p).as_array(), p.as_array(), atol=1e-15)
    q = CartesianPoint(0.3, -1.2, 2.0)
    qq = fr.invert_sphere(fr.invert_sphere(q))
    assert np.linalg.norm(qq.as_array() - q.as_array()) < 1e-12
    with pytest.raises(fr.DomainError):
        fr.invert_sphere(CartesianPoint(0, 0, 0))


def test_inversion_is_s_reflection():
    mod = Modulus(0.6)
    rng = np.random.default_rng(4)
    s, t, phi = _random_coords(mod, 1000, rng, margin=1e-2)
    p = fr.to_cartesian_array(s, t, phi, mod)
    q = p / np.sum(p * p, axis=1)[:, None]
    s2, t2, phi2 = fr.from_cartesian_array(q, mod)
    assert np.max(np.abs(s2 - (2 * mod.big_k - s))) < 1e-8
    assert np.max(np.abs(t2 - t)) < 1e-8
    assert np.max(np.abs(np.angle(np.exp(1j * (phi2 - phi))))) < 1e-12


def test_region_classify():
    mod = Modulus(0.5)
    assert fr.region_classify(CartesianPoint(0.5, 0, 0), PeanutRegion(mod.big_k, mod)) == "interior"
    assert fr.region_classify(CartesianPoint(0, 0, 0), PeanutRegion(1.7 * mod.big_k, mod)) == "interior"
    small = PeanutRegion(0.5 * mod.big_k, mod)
    p = CartesianPoint(0, 0, 0.99)
    om = fr.omega_surface(p, small)
    label = fr.region_classify(p, small)
    assert (label == "exterior") == (om >= 0)
    # cross-check with the inverse map, off the axis
    rng = np.random.default_rng(5)
    for region in (small, PeanutRegion(1.6 * mod.big_k, mod)):
        pts = rng.uniform(-2, 2, (300, 3))
        s, _, _ = fr.from_cartesian_array(pts, mod)
        for q, sq in zip(pts, s):
            lab = fr.region_classify(CartesianPoint(*q), region)
            assert lab == ("interior" if sq < region.s0 else "exterior")


def test_boundary_classification():
    mod = Modulus(0.5)
    region = PeanutRegion(1.3 * mod.big_k, mod)
    p = fr.to_cartesian(FlatRingCoords(region.s0, 0.2, 0.1, mod))
    assert fr.region_classify(p, region) == "boundary"


def test_scale_h():
    mod = Modulus(0.7)
    s = np.linspace(0.05, 1.95, 40) * mod.big_k
    r, _ = fr.meridian(s, 0.0, mod)
    sn = jacobi_sn_cn_dn(s, mod.k)[0]
    assert np.allclose(fr.scale_h(s, 0.0, mod), mod.k * r * np.abs(sn), rtol=1e-14)
    ss, tt = np.meshgrid(s, np.linspace(-0.99, 0.99, 40) * mod.big_k_prime)
    assert np.all(fr.scale_h(ss, tt, mod) > 0)


def _partials(s, t, phi, mod, h=1e-5):
    def f(a, b, c):
        return fr.to_cartesian_array(a, b, c, mod)
    ds = (f(s + h, t, phi) - f(s - h, t, phi)) / (2 * h)
    dt = (f(s, t + h, phi) - f(s, t - h, phi)) / (2 * h)
    dp = (f(s, t, phi + h) - f(s, t, phi - h)) / (2 * h)
    return ds, dt, dp


def test_surface_element():
    mod = Modulus(0.7)
    rng = np.random.default_rng(6)
    s, t, phi = _random_coords(mod, 200, rng, margin=0.05)
    _, dt, dp = _partials(s, t, phi, mod)
    area = np.linalg.norm(np.cross(dt, dp), axis=1)
    r, _ = fr.meridian(s, t, mod)
    assert np.max(np.abs(area / (fr.scale_h(s, t, mod) * r) - 1)) < 1e-6


def test_orthogonal_net():
    mod = Modulus(0.7)
    rng = np.random.default_rng(8)
    s, t, phi = _random_coords(mod, 200, rng, margin=0.05)
    ds, dt, dp = _partials(s, t, phi, mod)
    for a, b in ((ds, dt), (ds, dp), (dt, dp)):
        cos = np.abs(np.sum(a * b, axis=1)) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        assert np.max(cos) < 1e-8


def test_chi_forms_agree():
    mod = Modulus(0.7)
    rng = np.random.default_rng(9)
    s, t, _ = _random_coords(mod, 1000, rng)
    s2, t2, _ = _random_coords(mod, 1000, rng)
    a = chi(s, t, s2, t2, mod)
    b = chi_cartesian(s, t, s2, t2, mod)
    assert np.max(np.abs(a / b - 1)) < 1e-10
    assert np.all(b > 1)
    assert chi_cartesian(0.7, 0.3, 0.7, 0.3, mod) == 1.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 1.99), st.floats(-0.99, 0.99), st.floats(-3.1, 3.1),
       st.sampled_from(ROUND_TRIP_KS))
def test_round_trip_property(sf, tf, phi, k):
    mod = Modulus(k)
    c = FlatRingCoords(sf * mod.big_k, tf * mod.big_k_prime, phi, mod)
    p = fr.to_cartesian(c)
    back = fr.to_cartesian(fr.from_cartesian(p, mod))
    assert np.linalg.norm(back.as_array() - p.as_array()) < 1e-9 * max(1.0, p.norm)


# -- emitters ----------------------------------------------------------------------


def test_mesh_on_surface():
    mod = Modulus(0.5)
    region = PeanutRegion(1.7 * mod.big_k, mod)
    verts, faces, params = fr.surface_mesh(mod, region.s0)
    om = [abs(fr.omega_scaled(CartesianPoint(*v), region)) for v in verts]
    assert max(om) < 1e-6
    assert len(params) == len(verts)
    # closed: every edge shared by exactly two faces
    edges = {}
    for f in faces:
        for a, b in zip(f, f[1:] + f[:1]):
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    assert set(edges.values()) == {2}


def test_mesh_sphere():
    mod = Modulus(0.5)
    verts, _, _ = fr.surface_mesh(mod, mod.big_k)
    assert np.max(np.abs(np.linalg.norm(verts, axis=1) - 1)) < 1e-9


def test_mesh_area_refinement():
    mod = Modulus(0.5)
    s0 = 1.7 * mod.big_k
    a1 = fr.mesh_area(*fr.surface_mesh(mod, s0, 256, 384)[:2])
    a2 = fr.mesh_area(*fr.surface_mesh(mod, s0, 512, 768)[:2])
    assert abs(a1 - a2) < 1e-4 * a2


def test_mesh_bad_s0():
    with pytest.raises(fr.DomainError):
        fr.surface_mesh(0.5, 10.0)


def test_write_obj_and_csv(tmp_path):
    verts, faces, params = fr.surface_mesh(0.5, 1.0, 8, 12)
    fr.write_obj(tmp_path / "m.obj", verts, faces, header="test")
    fr.write_mesh_csv(tmp_path / "m.csv", verts, params, header="test")
    lines = (tmp_path / "m.obj").read_text().splitlines()
    assert sum(x.startswith("v ") for x in lines) == len(verts)
    assert sum(x.startswith("f ") for x in lines) == len(faces)
    assert all(x[0] in "#vf" for x in lines)
    rows = (tmp_path / "m.csv").read_text().splitlines()
    assert rows[1] == "s0,t,phi,x,y,z" and len(rows) == len(verts) + 2


def test_coordinate_lines():
    k = 2 ** -0.5
    mod = Modulus(k)
    lines = fr.coordinate_lines(k)
    assert len(lines) == 9
    for family, value, r, z in lines:
        if family == "s" and abs(value - mod.big_k) < 1e-12:
            assert np.max(np.abs(np.hypot(r, z) - 1)) < 1e-12
        if family == "t":
            b = fr.b_param(k)
            # a t-line runs from the inner cut disk to the outer cut annulus
            r0, z0 = fr.meridian(0.0, value, mod)
            r1, z1 = fr.meridian(2 * mod.big_k, value, mod)
            assert abs(z0) < 1e-14 and abs(z1) < 1e-12
            assert 0 < r0 < b and r1 > 1 / b
            assert np.hypot(r[0] - r0, z[0] - z0) < 5e-2 * r0
            assert np.hypot(r[-1] - r1, z[-1] - z1) < 5e-2 * r1


def test_coordinate_lines_orthogonal():
    k = 2 ** -0.5
    mod = Modulus(k)
    h = 1e-6
    for sf in (0.5, 1.0, 1.5):
        for tf in (-0.7, -0.5, -0.3, 0.3, 0.5, 0.7):
            s, t = sf * mod.big_k, tf * mod.big_k_prime
            a = np.subtract(fr.meridian(s + h, t, mod), fr.meridian(s - h, t, mod))
            b = np.subtract(fr.meridian(s, t + h, mod), fr.meridian(s, t - h, mod))
            assert abs(np.dot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)) < 1e-3
