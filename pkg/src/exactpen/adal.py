"""Alternating direction augmented Lagrangian (ADAL) for the penalty subproblem.

The problem is split as ``min phi(x) + dist(p | C)`` subject to
``A x + b = p``.  Each iteration takes the closed-form prox step in ``p``,
a CG solve in ``x`` and a dual ascent step in ``u``:

    p^{k+1} = argmin_p  dist(p | C) + 1/(2 mu) ||A x^k + b - p + mu u^k||^2
    x^{k+1} = argmin_x  phi(x)      + 1/(2 mu) ||A x + b - p^{k+1} + mu u^k||^2
    u^{k+1} = u^k + (A x^{k+1} + b - p^{k+1}) / mu

The dual estimate ``u_hat^{k+1} = (s^k - p^{k+1}) / mu`` with
``s^k = A x^k + b + mu u^k`` (equal to ``u^{k+1} - A(x^{k+1} - x^k) / mu``)
is a subgradient of ``dist(. | C)`` at ``p^{k+1}`` and hence dual feasible.

``accelerated=True`` extrapolates ``(x, u)`` with Nesterov weights and
restarts whenever the combined residual
``(||z||^2 + ||A(x^{k+1} - xbar^k)||^2) / mu`` fails to shrink by the
factor ``restart_eta``.
"""

import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import linop
from .cg import SOLVER_CG, CgConfig, NonFiniteError, cg_solve
from .duality import DualEvaluator, DualUnavailableError
from .irwa import GapReduction, next_t
from .report import NAN, SolveReport, TraceRow


@dataclass(frozen=True)
class StepAndResidual:
    """Stop when ``||x^{k+1} - x^k|| <= sigma`` and ``max_i ||z_i|| <= sigma_dprime``."""


@dataclass(frozen=True)
class AdalConfig:
    mu: float = 100.0
    sigma: float = 1e-6
    sigma_dprime: float = 1e-6
    max_iters: int = 1000
    stop_rule: Union[StepAndResidual, GapReduction] = StepAndResidual()
    accelerated: bool = False
    restart_eta: float = 0.999
    cg: CgConfig = SOLVER_CG
    track_dual: bool = True
    record_iterates: bool = False

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.sigma < 0 or self.sigma_dprime < 0:
            raise ValueError("stopping tolerances must be nonnegative")
        if not 0.0 < self.restart_eta <= 1.0:
            raise ValueError("restart_eta must lie in (0, 1]")


@dataclass
class AdalState:
    x: np.ndarray
    p: np.ndarray
    u: np.ndarray
    u_hat: np.ndarray
    k: int = 0
    cumulative_cg: int = 0
    # momentum variables (accelerated mode)
    x_bar: Optional[np.ndarray] = None
    u_bar: Optional[np.ndarray] = None
    t: float = 1.0
    c_prev: float = np.inf


def p_update(problem, x, u, mu):
    """Closed-form minimizer of the separable ``p`` subproblem.

    Returns ``(p, s)`` with ``s = A x + b + mu u``: pieces with
    ``dist(s_i | C_i) <= mu`` are projected, the others move a distance
    ``mu`` toward their projection.
    """
    s = problem.affine(x) + mu * u
    res = problem.C.residual(s)
    d = problem.C.block_norms(res)
    far = d > mu
    factor = np.divide(mu, d, out=np.ones_like(d), where=far)
    return s - problem.C.expand(factor) * res, s


def x_update(problem, p_vars, u, mu, warm, cg=SOLVER_CG):
    """CG solve of ``(H + A^T A / mu) x = -g - A^T (b - p + mu u) / mu``."""
    pr = problem
    if pr.m:
        op = linop.add(pr.H, linop.scaled(1.0 / mu, linop.normal_map(pr.A, np.ones(pr.m))))
        rhs = -pr.g - pr.A.apply_transpose(pr.b - p_vars + mu * u) / mu
    else:
        op, rhs = pr.H, -pr.g
    return cg_solve(op, rhs, warm, cg)


def multiplier_update(u, Ax_next, p_next, b, mu):
    """Return ``(u + z / mu, z)`` with ``z = A x + b - p``."""
    z = Ax_next + b - p_next
    return u + z / mu, z


def optimality_measure(C, q, z):
    """``max(sum_i ||q_i||, max_i ||z_i||)``: the product norm of ``q``
    against the dual norm of ``z``."""
    if len(C) == 0:
        return 0.0
    return float(max(np.sum(C.block_norms(q)), np.max(C.block_norms(z))))


def adal_step(problem, state, cfg):
    """One ADAL iteration; returns ``(new_state, info)``."""
    pr, mu = problem, cfg.mu
    if cfg.accelerated:
        xc, uc = state.x_bar, state.u_bar
    else:
        xc, uc = state.x, state.u
    p_new, s = p_update(pr, xc, uc, mu)
    res = x_update(pr, p_new, uc, mu, state.x if not cfg.accelerated else xc, cfg.cg)
    x_new = res.x
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteError(f"non-finite iterate at ADAL iteration {state.k}")
    Ax_new = pr.A.apply(x_new)
    u_new, z = multiplier_update(uc, Ax_new, p_new, pr.b, mu)
    u_hat = (s - p_new) / mu
    q = pr.A.apply(x_new - state.x)
    q_center = pr.A.apply(x_new - xc) if cfg.accelerated else q

    new = AdalState(
        x=x_new, p=p_new, u=u_new, u_hat=u_hat, k=state.k + 1,
        cumulative_cg=state.cumulative_cg + res.iters,
    )
    restarted = False
    if cfg.accelerated:
        c = (z @ z + q_center @ q_center) / mu
        if c < cfg.restart_eta * state.c_prev:
            t_new = next_t(state.t)
            beta = (state.t - 1.0) / t_new
            new.x_bar = x_new + beta * (x_new - state.x)
            new.u_bar = u_new + beta * (u_new - state.u)
            new.t, new.c_prev = t_new, c
        else:
            new.x_bar, new.u_bar = x_new.copy(), u_new.copy()
            new.t, new.c_prev = 1.0, state.c_prev / cfg.restart_eta
            restarted = True
    info = {
        "cg_iters": res.iters,
        "cg_converged": res.converged,
        "step_norm": float(np.linalg.norm(x_new - state.x)),
        "z": z,
        "q": q,
        "s": s,
        "restarted": restarted,
    }
    return new, info


def adal_solve(problem, cfg=AdalConfig(), x0=None, u0=None):
    """Run ADAL from ``(x0, u0)`` (defaults zero).  Exhausting
    ``max_iters`` is reported as ``status="max_iters"``."""
    pr = problem
    gap_rule = isinstance(cfg.stop_rule, GapReduction)
    x0 = np.zeros(pr.n) if x0 is None else np.array(x0, dtype=float)
    if x0.shape != (pr.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({pr.n},)")
    if u0 is None:
        u0 = np.zeros(pr.m)
    elif isinstance(u0, (list, tuple)):
        u0 = np.concatenate([np.atleast_1d(v) for v in u0]) if u0 else np.zeros(0)
    u0 = np.array(u0, dtype=float)
    if u0.shape != (pr.m,):
        raise ValueError(f"u0 has shape {u0.shape}, expected ({pr.m},)")
    state = AdalState(x=x0, p=pr.affine(x0), u=u0, u_hat=u0.copy())
    if cfg.accelerated:
        state.x_bar, state.u_bar = x0.copy(), u0.copy()

    dual = DualEvaluator(pr) if (cfg.track_dual or gap_rule) else None
    gap_ref = NAN
    if dual is not None:
        try:
            gap_ref = pr.eval_J0(x0) + dual(np.zeros(pr.m))
        except DualUnavailableError:
            if gap_rule:
                raise
            dual = None

    start = time.perf_counter_ns()
    record = cfg.record_iterates
    iterates = [x0.copy()] if record else None
    duals = [state.u_hat.copy()] if record else None
    us, ps, ss = ([u0.copy()], [state.p.copy()], [None]) if record else (None, None, None)
    C = pr.C

    def row_for(st, cg_iters, step_norm, z=None, q=None):
        J0 = pr.eval_J0(st.x)
        Jhat = pr.eval_phi(st.x) + float(np.sum(C.distances(st.p)))
        if not (np.isfinite(J0) and np.isfinite(Jhat)):
            raise NonFiniteError(f"non-finite objective at ADAL iteration {st.k}")
        d = dual(st.u_hat) if dual is not None else NAN
        z_norm = float(np.max(C.block_norms(z))) if z is not None and pr.m else NAN
        q_norm = float(np.sum(C.block_norms(q))) if q is not None and pr.m else NAN
        E = max(z_norm, q_norm) if z is not None and pr.m else NAN
        return TraceRow(
            iter=st.k, J0=J0, J_model=Jhat, dual_obj=d, gap=J0 + d,
            cg_iters=cg_iters, cum_cg=st.cumulative_cg, step_norm=step_norm,
            z_norm=z_norm, q_norm=q_norm, E_k=E,
            wall_ns=time.perf_counter_ns() - start,
        )

    trace = [row_for(state, 0, NAN)]
    status = "max_iters"
    unconverged = restarts = 0
    while state.k < cfg.max_iters:
        state, info = adal_step(pr, state, cfg)
        unconverged += not info["cg_converged"]
        restarts += info["restarted"]
        if record:
            iterates.append(state.x.copy())
            duals.append(state.u_hat.copy())
            us.append(state.u.copy())
            ps.append(state.p.copy())
            ss.append(info["s"])
        row = row_for(state, info["cg_iters"], info["step_norm"], info["z"], info["q"])
        trace.append(row)
        if gap_rule:
            if row.gap <= cfg.stop_rule.sigma * gap_ref:
                status = "gap"
                break
        elif info["step_norm"] <= cfg.sigma and (
            not pr.m or row.z_norm <= cfg.sigma_dprime
        ):
            status = "step"
            break

    return SolveReport(
        solver="adal-acc" if cfg.accelerated else "adal",
        status=status, x=state.x, trace=trace, iterations=state.k,
        cumulative_cg=state.cumulative_cg, cg_unconverged=unconverged,
        gap_reference=gap_ref, iterates=iterates, duals=duals,
        extra={"u": state.u, "p": state.p, "u_hat": state.u_hat,
               "restarts": restarts, "u_iterates": us, "p_iterates": ps,
               "s_iterates": ss,
               "dual_cg": dual.cg_iters if dual is not None else 0},
    )
