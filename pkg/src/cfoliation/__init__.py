"""Pointwise conformal-flatness test for the leaves of non-degenerate foliations.

Given a metric and a leaf distribution (a 1-form or spanning vector
fields), the package evaluates the bi-conformal connection and the leaf
obstruction tensors over exact third-order Taylor jets, and reports
whether the leaves are conformally flat at each sample point.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .analysis import (
    DistributionSpec,
    Lcg64,
    SamplePlan,
    Tolerances,
    Verdict,
    analyze,
    check_involutive,
    check_nondegenerate,
    classify_case,
)
from .biconformal import (
    ObstructionSet,
    ProjectorPair,
    bar_connection,
    bar_riemann,
    deformation_tensor,
    evaluate_point,
    L_Pi_and_scalar,
    obstruction_tensors,
    projectors_from_oneform,
    projectors_from_span,
)
from .expr import ExprAst, eval_jet, parse_expression
from .geometry import ChartSpec, christoffel, metric_at, ricci, riemann, scalar_curv
from .jets import Jet3, jet_seed
from .oracle import compare_B, compare_T, induced_chart
from .tensor import DenseTensor

__all__ = [
    "BACKEND", "ChartSpec", "DenseTensor", "DistributionSpec", "ExprAst", "Jet3", "Lcg64",
    "L_Pi_and_scalar", "ObstructionSet", "ProjectorPair", "SamplePlan", "Tolerances",
    "Verdict", "analyze", "bar_connection", "bar_riemann", "check_involutive",
    "check_nondegenerate", "christoffel", "classify_case", "compare_B", "compare_T",
    "deformation_tensor", "eval_jet", "evaluate_point", "induced_chart", "jet_seed",
    "metric_at", "obstruction_tensors", "parse_expression", "projectors_from_oneform",
    "projectors_from_span", "ricci", "riemann", "scalar_curv",
]
