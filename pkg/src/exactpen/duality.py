"""Dual objective and duality gap.

With ``H`` positive definite the dual of the penalty subproblem is

    minimize   1/2 (g + A^T u)^T H^{-1} (g + A^T u) - b^T u + sum_i supp(u_i | C_i)
    subject to ||u_i||_2 <= 1,

and for every primal ``x`` and dual-feasible ``u`` the sum
``J0(x) + dual_objective(u)`` is nonnegative; that sum is the gap.
"""

import numpy as np

from . import linop
from .cg import CgConfig, cg_solve

DUAL_CG = CgConfig(rel_tol=1e-12, abs_tol=1e-14, monotone=False, stall_iters=None)


class DualUnavailableError(RuntimeError):
    """``H`` could not be inverted on the needed vector; fall back to
    step-based stopping."""


def stack_dual(p, u):
    """Accept a stacked vector or a list of per-piece vectors."""
    if isinstance(u, (list, tuple)):
        u = np.concatenate([np.atleast_1d(np.asarray(ui, dtype=float)) for ui in u]) if u else np.zeros(0)
    u = np.asarray(u, dtype=float)
    if u.shape != (p.m,):
        raise ValueError(f"dual point has shape {u.shape}, expected ({p.m},)")
    return u


def is_dual_feasible(p, u, tol=1e-10):
    return p.C.is_dual_feasible(stack_dual(p, u), tol)


class DualEvaluator:
    """Evaluates the dual objective repeatedly, warm-starting the inner CG
    solve on ``H`` from the previous call."""

    def __init__(self, problem, cg=DUAL_CG, check_tol=1e-6):
        self.p = problem
        self.cg = cg
        self.check_tol = check_tol
        self._z = np.zeros(problem.n)
        self.cg_iters = 0

    def __call__(self, u):
        p = self.p
        u = stack_dual(p, u)
        support = p.C.support(u)
        if not np.all(np.isfinite(support)) or np.any(p.C.block_norms(u) > 1.0 + 1e-9):
            return np.inf
        v = p.g + p.A.apply_transpose(u) if p.m else p.g.copy()
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            quad = 0.0
        else:
            if isinstance(p.H, linop.ZeroMap):
                raise DualUnavailableError(
                    "H is zero; the dual is unavailable, use step-based stopping"
                )
            # tolerance is relative to ||v||, not to the warm-start residual
            z = self._z
            Hz = p.H.apply(z)
            r0 = np.linalg.norm(v - Hz)
            goal = max(self.cg.rel_tol * vnorm, self.cg.abs_tol)
            if r0 > goal:
                max_iters = self.cg.max_iters or 50 * p.n
                cfg = CgConfig(min(goal / r0, 0.5), self.cg.abs_tol, max_iters, self.cg.monotone, self.cg.stall_iters)
                res = cg_solve(p.H, v, z, cfg)
                self.cg_iters += res.iters
                z = res.x
                Hz = p.H.apply(z)
            if np.linalg.norm(Hz - v) > self.check_tol * vnorm:
                raise DualUnavailableError(
                    "CG on H did not converge (H singular or too ill-conditioned); "
                    "the dual is unavailable, use step-based stopping"
                )
            self._z = z
            # max_z v.z - 1/2 z.Hz: the error is quadratic in the CG error
            quad = float(v @ z - 0.5 * (z @ Hz))
        return quad - float(p.b @ u) + float(np.sum(support))


def dual_objective(p, u, cg=DUAL_CG):
    """Dual objective at ``u``; ``+inf`` if some support term is infinite.

    Raises :class:`DualUnavailableError` when ``H`` cannot be inverted.
    """
    return DualEvaluator(p, cg)(u)


def duality_gap(p, x, u, cg=DUAL_CG):
    return p.eval_J0(x) + dual_objective(p, u, cg)
