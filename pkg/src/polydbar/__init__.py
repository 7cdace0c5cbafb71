"""Numerical and exact tools for the dbar equation on the unit polydisc.

The canonical solution ``T[g] = Σ_j T_j S̃_j[g_j]`` is built from one-variable
solid Cauchy transforms ``T_j`` and boundary Cauchy integrals ``S_j``; Henkin's
integral formula gives an independent route to the same function.
"""

from .cauchy import (OperatorConfig, cauchy_circle_S, cauchy_disc_T, op_K, op_Pij, op_Stilde, op_T,
                     op_Tj, solution_operator, solve_dbar)
from .corpus import TestCase, get_case, manufactured_case, registry, rough_case
from .errors import (CalibrationError, ClosednessError, DbarError, InvalidArgument, NearBoundaryError,
                     OutOfDomain, ResourceGuardError, SectorTieError, StencilOutOfDomain)
from .exact import (GaussianRational, MonomialPoly, exact_dbar, exact_K, exact_opT, exact_S,
                    exact_T)
from .field import Form01, Point, ScalarFunction, check_dbar_closed, wirtinger_fd
from .henkin import (CALIBRATED_SIGNS, HenkinTerm, SectorPermutation, SignTable, calibrate_signs,
                     eval_henkin_term, henkin_terms, op_H, op_P, sector_of)
from .holder import HolderEstimate, PolydiscSampler, estimate_exponent, holder_seminorm
from .quadrature import (WeightedNodes, circle_nodes, disc_nodes, radial_profile_nodes,
                         torus_nodes)

__version__ = "0.1.0"
