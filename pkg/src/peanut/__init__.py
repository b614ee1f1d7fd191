"""Peanut harmonics in flat-ring cyclide coordinates.

Submodules:

* ``elliptic``: complete elliptic integrals and Jacobi elliptic functions
* ``specfun``: Legendre Q, Ferrers P, Gegenbauer C, Gauss-Jacobi rules
* ``lame``: Lamé-Wangerin eigenpairs on the real and imaginary axes
* ``flatring``: the coordinate map, its inverse, peanut surfaces, meshes
* ``harmonics``: internal/external harmonics, the expansion of 1/|r - r*|,
  the Dirichlet problem
* ``limits``: executable identity checks and the k -> 0, k -> 1 limit laws
* ``cli``: command-line front end
"""

from .elliptic import Modulus, complete_K, glaisher, jacobi_sn_cn_dn
from .flatring import (CartesianPoint, FlatRingCoords, PeanutRegion, from_cartesian,
                       to_cartesian)
from .harmonics import (PeanutHarmonicIndex, TruncationSpec, expand_inverse_distance,
                        external_h, internal_g)
from .lame import LameMode, LameProblem, get_mode, solve_eigen

__version__ = "0.1.0"

__all__ = [
    "Modulus",
    "complete_K",
    "glaisher",
    "jacobi_sn_cn_dn",
    "CartesianPoint",
    "FlatRingCoords",
    "PeanutRegion",
    "from_cartesian",
    "to_cartesian",
    "PeanutHarmonicIndex",
    "TruncationSpec",
    "expand_inverse_distance",
    "external_h",
    "internal_g",
    "LameMode",
    "LameProblem",
    "get_mode",
    "solve_eigen",
]
