"""Exterior algebra over a chart or abstract coframe."""

from .forms import (
    BasisMismatch,
    ChartBasis,
    ExteriorError,
    Form,
    FrameBasis,
    pullback_chart,
    wedge,
)
from .linalg import SingularMatrix, mat_det, mat_inverse, mat_mul, nullspace, rref
from .primitives import NotClosed, admissible_base, poincare_primitive, potential
from .systems import (
    CoframeChange,
    Pfaffian,
    derived_flag,
    derived_system,
    reduce_mod,
    reduce_mod_full,
)

__all__ = [
    "BasisMismatch",
    "ChartBasis",
    "CoframeChange",
    "ExteriorError",
    "Form",
    "FrameBasis",
    "NotClosed",
    "Pfaffian",
    "SingularMatrix",
    "admissible_base",
    "derived_flag",
    "derived_system",
    "mat_det",
    "mat_inverse",
    "mat_mul",
    "nullspace",
    "poincare_primitive",
    "potential",
    "pullback_chart",
    "reduce_mod",
    "reduce_mod_full",
    "rref",
    "wedge",
]
