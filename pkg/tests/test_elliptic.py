import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from oracles import mp_sn_cn_dn
from peanut.elliptic import (EllipticDomainError, Modulus, PoleError, complete_K, glaisher,
                             imag_transform, jacobi_sn_cn_dn, sn_cn_dn)

KS = np.linspace(0.05, 0.95, 10)


def test_complete_k_small_modulus():
    assert abs(complete_K(1e-12) - math.pi / 2) < 1e-10


def test_complete_k_quadrature():
    k = 0.6
    ref, _ = integrate.quad(lambda th: 1.0 / math.sqrt(1 - k * k * math.sin(th) ** 2), 0,
                            math.pi / 2, epsabs=0, epsrel=1e-13)
    assert abs(complete_K(k) - ref) < 1e-12 * ref


def test_complete_k_log_divergence():
    assert complete_K(1 - 1e-8) > 9


@pytest.mark.parametrize("k", [0.0, 1.0, -0.2, 1.5])
def test_complete_k_domain(k):
    with pytest.raises(EllipticDomainError):
        complete_K(k)


def test_modulus_invariants():
    a, b = Modulus(0.3), Modulus(0.8)
    for m in (a, b):
        assert abs(m.k ** 2 + m.k_prime ** 2 - 1) < 1e-14
        assert m.big_k > math.pi / 2
        assert abs(m.omega * 2 * m.big_k - math.pi) < 1e-14
        assert abs(m.big_k_prime - complete_K(m.k_prime)) < 1e-14
    assert b.big_k > a.big_k


def test_sn_cn_dn_special_values():
    k = 0.6
    assert sn_cn_dn(0.0, k) == (0.0, 1.0, 1.0)
    s, c, d = sn_cn_dn(complete_K(k), k)
    assert abs(s - 1) < 1e-14 and abs(c) < 1e-14 and abs(d - 0.8) < 1e-14


def test_sn_cn_dn_against_mpmath():
    ref = mp_sn_cn_dn(0.7, 0.6)
    got = sn_cn_dn(0.7, 0.6)
    assert np.allclose(got, np.real(ref), rtol=0, atol=1e-12)


def test_vectorised_matches_scipy():
    rng = np.random.default_rng(3)
    u = rng.uniform(-10, 10, 1000)
    for k in (0.2, 0.7, 0.99):
        s, c, d = jacobi_sn_cn_dn(u, k)
        rs, rc, rd, _ = special.ellipj(u, k * k)
        assert np.max(np.abs(s - rs)) < 1e-12
        assert np.max(np.abs(c - rc)) < 1e-12
        assert np.max(np.abs(d - rd)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 0.99))
def test_pythagorean_identities(u, k):
    s, c, d = sn_cn_dn(u, k)
    assert abs(s * s + c * c - 1) < 1e-12
    assert abs(d * d + k * k * s * s - 1) < 1e-12


def test_pythagorean_bulk():
    rng = np.random.default_rng(0)
    u = rng.uniform(-20, 20, 10_000)
    for k in rng.uniform(0.01, 0.99, 5):
        s, c, d = jacobi_sn_cn_dn(u, k)
        assert np.max(np.abs(s * s + c * c - 1)) < 1e-12
        assert np.max(np.abs(d * d + k * k * s * s - 1)) < 1e-12


def test_periodicity():
    for k in KS:
        big_k = complete_K(k)
        u = np.linspace(-3, 3, 50)
        assert np.max(np.abs(jacobi_sn_cn_dn(u + 4 * big_k, k)[0] - jacobi_sn_cn_dn(u, k)[0])) < 1e-11


def test_glaisher():
    k = 0.6
    big_k = complete_K(k)
    assert glaisher("dc", 0.0, k) == 1.0
    assert abs(glaisher("ns", big_k, k) - 1) < 1e-14
    with pytest.raises(PoleError):
        glaisher("sc", big_k, k)
    s, c, d = sn_cn_dn(0.4, k)
    assert abs(glaisher("sd", 0.4, k) - s / d) < 1e-15


def test_imag_transform():
    k = 0.6
    kp = 0.8
    val, imag = imag_transform("sn", 0.0, k)
    assert val == 0.0 and imag
    t = 0.3 * complete_K(kp)
    val, imag = imag_transform("dn", t, k)
    s, c, d = sn_cn_dn(t, kp)
    assert not imag and abs(val - d / c) < 1e-14
    ts = np.linspace(-0.99, 0.99, 101) * complete_K(kp)
    vals, imag = imag_transform("cn", ts, k)
    assert not imag and np.all(vals >= 1.0)
    # against complex arithmetic
    ref = mp_sn_cn_dn(1j * t, k)
    assert abs(imag_transform("sn", t, k)[0] - ref[0].imag) < 1e-12
    assert abs(imag_transform("cn", t, k)[0] - ref[1].real) < 1e-12


def test_imag_transform_pole():
    with pytest.raises(PoleError):
        imag_transform("cn", complete_K(0.8), 0.6)


@pytest.mark.parametrize("k", KS)
def test_sine_comparison_inequalities(k):
    m = Modulus(k)
    r = np.linspace(m.big_k / 200, m.big_k, 200)
    s, c, _ = jacobi_sn_cn_dn(r, k)
    om = m.omega
    assert np.all(c / s <= om / np.tan(om * r) + 1e-12)
    assert np.all(s <= np.sin(om * r) / om + 1e-12)
    assert np.all(s >= r / m.big_k - 1e-12)
