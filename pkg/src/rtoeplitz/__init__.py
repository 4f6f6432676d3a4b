"""Toeplitz operators with quasi-homogeneous symbols on Bergman spaces of Reinhardt domains.

The package has four layers:

* ``lattice`` / ``indexsets``: multi-indices, boxes, truncation lattices and
  exact symbolic subsets of N^n;
* ``domains`` / ``quadrature`` / ``moments``: radial profiles, cubature and
  the Bergman-space moment table;
* ``symbols`` / ``toeplitz``: symbols and their operators on monomials;
* ``fibers`` / ``harness`` / ``cli``: condition (I), experiments and the
  command line.
"""

__version__ = "0.1.0"

from .domains import DomainProfile, ball, ellipsoid, generic, parse_domain, polydisk, rescale_into_unit_box, squared_region
from .fibers import deletion_process, is_thick, locate_condition_I, satisfies_condition_I, FiberQuery
from .indexsets import SymbolicIndexSet, parse_index_set
from .lattice import IndexBox, MultiIndex, TruncationLattice, box_top_slice, shifted_lattice
from .moments import MomentTable, RadialIntegrand, bergman_coefficient, moment_transform, monomial_norm, weighted_moment
from .symbols import QhSymbol, SlicedSymbol, SymbolSum, fourier_slice, g_profile
from .toeplitz import (
    LatticeOperator,
    ProductReport,
    product_apply,
    product_apply_sliced,
    toeplitz_apply,
    zero_product_verdict,
)

__all__ = [
    "__version__",
    "DomainProfile",
    "ball",
    "ellipsoid",
    "generic",
    "parse_domain",
    "polydisk",
    "rescale_into_unit_box",
    "squared_region",
    "FiberQuery",
    "deletion_process",
    "is_thick",
    "locate_condition_I",
    "satisfies_condition_I",
    "SymbolicIndexSet",
    "parse_index_set",
    "IndexBox",
    "MultiIndex",
    "TruncationLattice",
    "box_top_slice",
    "shifted_lattice",
    "MomentTable",
    "RadialIntegrand",
    "bergman_coefficient",
    "moment_transform",
    "monomial_norm",
    "weighted_moment",
    "QhSymbol",
    "SlicedSymbol",
    "SymbolSum",
    "fourier_slice",
    "g_profile",
    "LatticeOperator",
    "ProductReport",
    "product_apply",
    "product_apply_sliced",
    "toeplitz_apply",
    "zero_product_verdict",
]
