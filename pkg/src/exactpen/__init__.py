"""Matrix-free solvers for convex exact-penalty subproblems.

    min_x  g.x + 1/2 x.Hx + sum_i dist_2(A_i x + b_i | C_i)

by iterative re-weighting (:func:`irwa_solve`) and an alternating
direction augmented Lagrangian (:func:`adal_solve`).
"""

from . import linop
from .adal import AdalConfig, StepAndResidual, adal_solve
from .cg import CgConfig, CgResult, NonFiniteError, cg_solve
from .duality import DualUnavailableError, dual_objective, duality_gap
from .irwa import GapReduction, IrwaConfig, StepAndEps, irwa_solve
from .problem import ConvexPiece, PenaltyProblem
from .report import SolveReport, TraceRow, write_trace_csv
from .sets import Ball2, Box, NonPosOrthant, Point, ProductSet, ZeroPoint

__version__ = "0.1.0"

__all__ = [
    "linop", "AdalConfig", "StepAndResidual", "adal_solve", "CgConfig", "CgResult",
    "NonFiniteError", "cg_solve", "DualUnavailableError", "dual_objective",
    "duality_gap", "GapReduction", "IrwaConfig", "StepAndEps", "irwa_solve",
    "ConvexPiece", "PenaltyProblem", "SolveReport", "TraceRow", "write_trace_csv",
    "Ball2", "Box", "NonPosOrthant", "Point", "ProductSet", "ZeroPoint",
]
