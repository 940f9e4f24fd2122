"""Weighted L² machinery for p-convex domains on flat backgrounds.

The package is organized in layers:

* :mod:`pconvex.exterior` — pointwise exterior algebra: forms with
  lexicographically ordered multi-index coefficients, the induced
  operator of a symmetric matrix on p-forms, its spectrum, pseudo-inverse,
  and rank-one image checks.
* :mod:`pconvex.convexity` — p-plurisubharmonicity graders for matrices,
  scalar fields, and boundaries, plus curvature-term bounds.
* :mod:`pconvex.fieldexpr` — a tiny expression language for scalar fields
  with exact first/second derivatives (2-jets).
* :mod:`pconvex.weights` — weight construction: convex reparametrizations,
  convexification against a defect, integrability tails, the scaled
  squared-distance weight, and the exponent/stiffness search for
  boundary-composite weights.
* :mod:`pconvex.discrete` — cubical complexes over box/staircase domains,
  weighted cochain calculus, and the discrete energy identity.
* :mod:`pconvex.solver` — minimal-norm solves of ``du = f``, verified
  norm estimates with their predicted constants, harmonic ranks, and the
  log-marginal convexity check.
* :mod:`pconvex.cli` — batch front-end over INI configs (``pconvex run``,
  ``pconvex list-builtins``).
"""

from .convexity import (boundary_p_convexity, curvature_bounds_check,
                        field_p_psh_report, min_p_trace, p_positivity_report,
                        signature_count)
from .discrete import (Cochain, CubicalComplex, GridDomain, build_complex,
                       coboundary, energy_identity_residual, mass,
                       sample_cochain, weighted_adjoint)
from .exterior import (PointForm, dim_forms, index_list, inverse_bound_check,
                       pairing_quadratic, quadform_action, quadform_eigen,
                       quadform_matrix, quadform_pinv, rank_one_image_check)
from .fieldexpr import Jet2, ScalarFieldExpr, compose_df, parse
from .solver import (BoundReport, berndtsson_report, closed_form_from_potential,
                     cohomology_rank, composite_minimal_estimate,
                     hormander_report, minimal_estimate_report,
                     minimal_solution, monotonicity_check, nonpsh_report,
                     prekopa_check)
from .weights import (convexify, df_search, diameter_weight,
                      integrability_modifier, lattice_samples,
                      stiffness_floor)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # exterior
    "PointForm", "dim_forms", "index_list", "inverse_bound_check",
    "pairing_quadratic", "quadform_action", "quadform_eigen",
    "quadform_matrix", "quadform_pinv", "rank_one_image_check",
    # convexity
    "boundary_p_convexity", "curvature_bounds_check", "field_p_psh_report",
    "min_p_trace", "p_positivity_report", "signature_count",
    # fieldexpr
    "Jet2", "ScalarFieldExpr", "compose_df", "parse",
    # weights
    "convexify", "df_search", "diameter_weight", "integrability_modifier",
    "lattice_samples", "stiffness_floor",
    # discrete
    "Cochain", "CubicalComplex", "GridDomain", "build_complex", "coboundary",
    "energy_identity_residual", "mass", "sample_cochain", "weighted_adjoint",
    # solver
    "BoundReport", "berndtsson_report", "closed_form_from_potential",
    "cohomology_rank", "composite_minimal_estimate", "hormander_report",
    "minimal_estimate_report", "minimal_solution", "monotonicity_check",
    "nonpsh_report", "prekopa_check",
]
