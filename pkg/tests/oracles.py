"""Independent reference computations used only by the tests."""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy import special


def _e_norm(nu, j):
    # closed form of int (1-x^2)^(nu+1/2) C_j^(nu+1)(x)^2 dx, via scipy gammaln
    lam = nu + 1.0
    return math.exp(math.log(math.pi) + special.gammaln(j + 2 * lam)
                    - (2 * lam - 1) * math.log(2.0) - special.gammaln(j + 1.0)
                    - math.log(j + lam) - 2 * special.gammaln(lam))


def galerkin_eigenvalues(nu: float, kappa: float, nbasis: int = 80, nquad: int = 240):
    """Eigenvalues of -w'' + nu(nu+1) ns^2(r, kappa) w = lam w on (0, 2K).

    Spectral Galerkin in the Poschl-Teller basis sin^(nu+1)(wr) C_j^(nu+1)(cos wr),
    w = pi/(2K), which diagonalises the part nu(nu+1) w^2 csc^2(wr); the smooth
    remainder ns^2 - w^2 csc^2 is integrated by Gauss-Gegenbauer quadrature.
    Elliptic functions come from scipy, not from the package under test.
    """
    m = kappa * kappa
    big_k = special.ellipk(m)
    om = math.pi / (2 * big_k)
    x, wq = special.roots_gegenbauer(nquad, nu + 1.0) if nu > -0.5 else special.roots_legendre(nquad)
    r = np.arccos(x) / om
    r = np.where(r > big_k, 2 * big_k - r, r)
    sn = special.ellipj(r, m)[0]
    rem = 1.0 / sn ** 2 - om ** 2 / np.sin(om * r) ** 2
    c = np.array([special.eval_gegenbauer(j, nu + 1.0, x) for j in range(nbasis)])
    norms = np.sqrt(om / np.array([_e_norm(nu, j) for j in range(nbasis)]))
    phi = c * norms[:, None]
    a = nu * (nu + 1.0) / om * (phi * (wq * rem)) @ phi.T
    a += np.diag(om ** 2 * (np.arange(nbasis) + nu + 1.0) ** 2)
    return np.linalg.eigvalsh(0.5 * (a + a.T))


def mp_sn_cn_dn(u: complex, k: float, dps: int = 30):
    """Complex-argument sn, cn, dn through mpmath."""
    with mp.workdps(dps):
        m = mp.mpf(k) ** 2
        return tuple(complex(mp.ellipfun(f, mp.mpc(u), m=m)) for f in ("sn", "cn", "dn"))


def mp_legendre_q(nu: float, z: float) -> float:
    with mp.workdps(30):
        return float(mp.re(mp.legenq(nu, 0, z, type=3)))
