"""Iterative re-weighting (IRWA) for the penalty subproblem.

Each iteration minimizes a weighted least-squares model of the penalty,

    g.x + 1/2 x.Hx + 1/2 sum_i w_i ||A_i x + b_i - P_{C_i}(A_i c + b_i)||^2,
    w_i = (dist_i(c)^2 + eps_i^2)^(-1/2),

around the current center ``c`` by CG, then shrinks the relaxation vector
``eps`` when the step is small relative to the smoothed residuals.  The
smoothed objective ``J(x, eps)`` decreases monotonically when the model
is minimized exactly.

Variants: ``"plain"``; ``"eqineq"`` for 1-D equality (``ZeroPoint``) and
inequality (``NonPosOrthant``) rows, which stops shrinking ``eps`` on
strictly inactive inequalities; ``"fixed_eps"``, which never changes
``eps``.  ``accelerated=True`` adds Nesterov extrapolation with an
objective safeguard.
"""

import math
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import linop
from .cg import SOLVER_CG, CgConfig, NonFiniteError, cg_solve
from .duality import DualEvaluator, DualUnavailableError
from .report import NAN, SolveReport, TraceRow

VARIANTS = ("plain", "eqineq", "fixed_eps")


@dataclass(frozen=True)
class StepAndEps:
    """Stop when ``||x^{k+1} - x^k|| <= sigma`` and ``||eps^k|| <= sigma_prime``."""


@dataclass(frozen=True)
class GapReduction:
    """Stop when the duality gap falls to ``sigma`` times the reference gap
    ``J0(x^0) + dual(0)``; ``sigma=0.05`` means a 95% reduction."""

    sigma: float

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"gap reduction fraction must lie in (0, 1), got {self.sigma}")


StopRule = Union[StepAndEps, GapReduction]


@dataclass(frozen=True)
class IrwaConfig:
    eta: float = 0.6
    gamma: float = 1.0 / 6.0
    M: float = 1e4
    eps0: Union[float, np.ndarray] = 2000.0
    sigma: float = 1e-6
    sigma_prime: float = 1e-6
    # Relaxation never shrinks below this; smaller values only overflow
    # the weights once the step test keeps passing on a stalled iterate.
    eps_floor: float = 1e-14
    max_iters: int = 1000
    stop_rule: StopRule = StepAndEps()
    variant: str = "plain"
    accelerated: bool = False
    cg: CgConfig = SOLVER_CG
    track_dual: bool = True
    record_iterates: bool = False

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.M > 0:
            raise ValueError("M must be positive")
        if np.any(np.asarray(self.eps0) <= 0):
            raise ValueError("eps0 must be strictly positive")
        if not self.eps_floor >= 0:
            raise ValueError("eps_floor must be nonnegative")
        if self.sigma < 0 or self.sigma_prime < 0:
            raise ValueError("stopping tolerances must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass
class IrwaState:
    x: np.ndarray
    eps: np.ndarray
    eps_hat: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    t: float = 1.0
    k: int = 0
    cumulative_cg: int = 0


@dataclass
class StepInfo:
    cg_iters: int
    cg_converged: bool
    step_norm: float
    q_norms: np.ndarray
    r_norms: np.ndarray
    weights: np.ndarray
    qWq: float
    shrunk: bool
    safeguarded: bool = False
    line_searched: bool = False
    rejected: bool = False


def check_eqineq(p):
    if not all(k in ("zero", "nonpos") for k in p.C.kinds) or np.any(p.C.dims != 1):
        raise ValueError(
            "the eqineq variant needs 1-dimensional zero or nonpos pieces only"
        )


def subproblem_system(p, center, eps):
    """``(op, rhs)`` of the re-weighted model's normal equation around
    ``center``:

        (H + sum_i w_i A_i^T A_i) x = -g + sum_i w_i A_i^T (P_i(A_i c + b_i) - b_i)

    ``op x - rhs`` is the model gradient at ``x``.
    """
    y = p.affine(center)
    proj = p.C.project(y)
    w = 1.0 / np.hypot(p.C.block_norms(y - proj), eps)
    W = p.C.expand(w)
    op = linop.add(p.H, linop.normal_map(p.A, W)) if p.m else p.H
    rhs = -p.g + (p.A.apply_transpose(W * (proj - p.b)) if p.m else 0.0)
    return op, rhs


def irwa_subproblem(p, center, eps, warm, cg=SOLVER_CG):
    """Minimize the re-weighted model around ``center`` by CG from ``warm``;
    returns the :class:`~exactpen.cg.CgResult` (``.x`` is the new point)."""
    op, rhs = subproblem_system(p, center, eps)
    return cg_solve(op, rhs, warm, cg)


def model_line_search(op, rhs, center, x_cg):
    """Exact minimizer of the quadratic model along ``x_cg - center``, or
    along the negative model gradient when that is not a descent
    direction.  Used when rounding in CG has cost the model decrease."""
    grad = op.apply(center) - rhs
    d = x_cg - center
    slope = float(grad @ d)
    if not slope < 0.0:
        d, slope = -grad, -float(grad @ grad)
    curv = float(d @ op.apply(d))
    if not (curv > 0.0 and slope < 0.0):
        return center
    return center + (-slope / curv) * d


def relaxation_test(q_norms, r_norms, eps, M, gamma):
    """``||q_i|| <= M (||r_i||^2 + eps_i^2)^(1/2 + gamma)`` for every piece."""
    bound = M * (r_norms ** 2 + eps ** 2) ** (0.5 + gamma)
    return bool(np.all(q_norms <= bound))


def relaxation_update(eps, q_norms, r_norms, cfg):
    if relaxation_test(q_norms, r_norms, eps, cfg.M, cfg.gamma):
        return np.maximum(cfg.eta * eps, cfg.eps_floor)
    return eps


def relaxation_update_eqineq(eps, eps_hat, q_norms, r_norms, affine, is_eq, cfg):
    """Shrink ``eps_hat`` on a passed test; equality rows follow it, strictly
    inactive inequality rows (``a_i.x + b_i <= -eps_hat_i``) keep their
    ``eps``, the rest follow ``eps_hat``."""
    if not relaxation_test(q_norms, r_norms, eps, cfg.M, cfg.gamma):
        return eps, eps_hat
    eps_hat_new = np.maximum(cfg.eta * eps_hat, cfg.eps_floor)
    inactive = ~is_eq & (np.minimum(affine, 0.0) <= -eps_hat)
    return np.where(inactive, eps, eps_hat_new), eps_hat_new


def next_t(t):
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))


def irwa_step(p, state, cfg):
    """One IRWA iteration; returns ``(new_state, StepInfo)``."""
    center = state.y if cfg.accelerated else state.x
    affine = p.affine(center)
    r_norms = p.C.block_norms(p.C.residual(affine))
    eps = state.eps
    op, rhs = subproblem_system(p, center, eps)
    res = cg_solve(op, rhs, center, cfg.cg)
    x_new, cg_iters, line_searched, rejected = res.x, res.iters, False, False
    J_center = p.eval_J(center, eps)
    if p.eval_J(x_new, eps) > J_center:
        # an inexact or rounding-polluted solve lost the model decrease;
        # fall back to an exact line search on the model (two products)
        x_new = model_line_search(op, rhs, center, x_new)
        cg_iters += 2
        line_searched = True
        if p.eval_J(x_new, eps) > J_center:
            # with tiny eps the weights are so large that the model itself
            # is rounding noise; stay put and let eps keep shrinking
            x_new, rejected = center.copy(), True
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteError(f"non-finite iterate at IRWA iteration {state.k}")
    dx = x_new - center
    q_norms = p.C.block_norms(p.A.apply(dx)) if p.m else np.zeros(0)
    w = 1.0 / np.hypot(r_norms, eps)
    qWq = float(dx @ p.H.apply(dx) + np.sum(w * q_norms ** 2))

    eps_hat = state.eps_hat
    if cfg.variant == "fixed_eps":
        eps_new = eps
    elif cfg.variant == "eqineq":
        is_eq = np.array([k == "zero" for k in p.C.kinds], dtype=bool)
        eps_new, eps_hat = relaxation_update_eqineq(
            eps, eps_hat, q_norms, r_norms, affine, is_eq, cfg
        )
    else:
        eps_new = relaxation_update(eps, q_norms, r_norms, cfg)
    shrunk = eps_new is not eps

    y_new, t_new, safeguarded = None, state.t, False
    if cfg.accelerated:
        t_new = next_t(state.t)
        y_new = x_new + ((state.t - 1.0) / t_new) * (x_new - state.x)
        if p.eval_J(y_new, eps_new) > p.eval_J(x_new, eps_new):
            y_new, safeguarded = x_new, True

    info = StepInfo(
        cg_iters=cg_iters,
        cg_converged=res.converged,
        step_norm=float(np.linalg.norm(x_new - state.x)),
        q_norms=q_norms,
        r_norms=r_norms,
        weights=w,
        qWq=qWq,
        shrunk=shrunk,
        safeguarded=safeguarded,
        line_searched=line_searched,
        rejected=rejected,
    )
    new_state = IrwaState(
        x=x_new, eps=eps_new, eps_hat=eps_hat, y=y_new, t=t_new,
        k=state.k + 1, cumulative_cg=state.cumulative_cg + cg_iters,
    )
    return new_state, info


def dual_estimate(p, x, eps):
    """``u_i = w_i r_i`` at ``(x, eps)``; always dual feasible."""
    y = p.affine(x)
    r = p.C.residual(y)
    w = 1.0 / np.hypot(p.C.block_norms(r), eps)
    return p.C.expand(w) * r


def irwa_solve(p, cfg=IrwaConfig(), x0=None):
    """Run IRWA from ``x0`` (default zero) until the stop rule fires or
    ``max_iters`` iterations pass.  Exhausting the budget is reported as
    ``status="max_iters"``, not raised."""
    if cfg.variant == "eqineq":
        check_eqineq(p)
    gap_rule = isinstance(cfg.stop_rule, GapReduction)
    x0 = np.zeros(p.n) if x0 is None else np.array(x0, dtype=float)
    if x0.shape != (p.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({p.n},)")
    eps0 = np.array(np.broadcast_to(np.asarray(cfg.eps0, dtype=float), (p.l,)))
    state = IrwaState(
        x=x0, eps=eps0,
        eps_hat=eps0.copy() if cfg.variant == "eqineq" else None,
        y=x0.copy() if cfg.accelerated else None,
    )

    dual = DualEvaluator(p) if (cfg.track_dual or gap_rule) else None
    gap_ref = NAN
    if dual is not None:
        try:
            gap_ref = p.eval_J0(x0) + dual(np.zeros(p.m))
        except DualUnavailableError:
            if gap_rule:
                raise
            dual = None

    start = time.perf_counter_ns()
    iterates = [x0.copy()] if cfg.record_iterates else None
    duals = [] if cfg.record_iterates else None
    qWq = []

    def row_for(st, cg_iters, step_norm):
        u = dual_estimate(p, st.x, st.eps)
        if duals is not None:
            duals.append(u)
        J0 = p.eval_J0(st.x)
        Jm = p.eval_J(st.x, st.eps)
        if not (np.isfinite(J0) and np.isfinite(Jm)):
            raise NonFiniteError(f"non-finite objective at IRWA iteration {st.k}")
        d = dual(u) if dual is not None else NAN
        eps_norm = np.linalg.norm(st.eps_hat if st.eps_hat is not None else st.eps)
        return TraceRow(
            iter=st.k, J0=J0, J_model=Jm, dual_obj=d, gap=J0 + d,
            cg_iters=cg_iters, cum_cg=st.cumulative_cg, step_norm=step_norm,
            eps_norm=float(eps_norm), wall_ns=time.perf_counter_ns() - start,
        )

    trace = [row_for(state, 0, NAN)]
    status = "max_iters"
    unconverged = line_searches = rejections = 0
    while state.k < cfg.max_iters:
        old = state
        state, info = irwa_step(p, state, cfg)
        unconverged += not info.cg_converged
        line_searches += info.line_searched
        rejections += info.rejected
        qWq.append(info.qWq)
        if iterates is not None:
            iterates.append(state.x.copy())
        row = row_for(state, info.cg_iters, info.step_norm)
        trace.append(row)
        if gap_rule:
            if row.gap <= cfg.stop_rule.sigma * gap_ref:
                status = "gap"
                break
        else:
            old_eps = old.eps_hat if old.eps_hat is not None else old.eps
            eps_ok = cfg.variant == "fixed_eps" or np.linalg.norm(old_eps) <= cfg.sigma_prime
            if info.step_norm <= cfg.sigma and eps_ok:
                status = "step"
                break

    solver = "irwa" + ("-" + cfg.variant if cfg.variant != "plain" else "") + (
        "-acc" if cfg.accelerated else ""
    )
    return SolveReport(
        solver=solver, status=status, x=state.x, trace=trace,
        iterations=state.k, cumulative_cg=state.cumulative_cg,
        cg_unconverged=unconverged, gap_reference=gap_ref,
        iterates=iterates, duals=duals,
        extra={"eps": state.eps, "eps_hat": state.eps_hat, "qWq": qWq, "line_searches": line_searches,
               "rejected_steps": rejections,
               "dual_cg": dual.cg_iters if dual is not None else 0},
    )
