"""Exact computations with toroidal b-divisors, convex recession functions
and the asymptotics of Siegel-Jacobi forms."""
from .exactnum import PI, PiScalar, RatMatrix, bernoulli, psd_certify, trace_dominance, zeta_negative
from .complexes import ConicalComplex, LatticeCone, build_complex, complex_from_maximal, subdivide_at
from .plconical import PLConicalFunction, pl_test, toric_degree
from .convexrec import ConvexOracle, lelong_number, recession
from .gradedseries import MonomialGradedSeries, ratio_filter, volume
from .siegelcones import (
    AdmissibleDecomposition,
    admissibility_check,
    cartier_diagnostic,
    standard_decomposition_g1,
    sufficiently_negative_builder,
)
from .asymdim import WeightIndex, closed_forms, siegel_volume, trivial_dims

__version__ = "0.1.0"
