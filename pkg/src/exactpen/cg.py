"""Warm-started conjugate gradients for symmetric PSD operators."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


class NonFiniteError(FloatingPointError):
    """Raised when an iteration produces NaN or infinity."""


@dataclass(frozen=True)
class CgConfig:
    """Stopping rule ``||op x - rhs|| <= max(rel_tol * ||op x0 - rhs||, abs_tol)``.

    ``max_iters=None`` means ten times the dimension.

    With ``monotone`` set the returned iterate is the minimal-residual
    smoothing of the CG sequence: each step replaces the current point by
    the combination of it and the new CG iterate with the smallest
    residual.  The reported residual history therefore never increases,
    while the underlying recurrence (and its convergence speed) is left
    untouched.  Without it the raw CG iterates are reported.

    ``stall_iters`` ends a solve early (``status="stalled"``, unconverged)
    once that many consecutive steps fail to cut the best residual by a
    factor 0.999, which is what happens when the target lies below
    rounding level.  Unconverged solves return the smallest-residual
    iterate seen.
    """

    rel_tol: float = 0.1
    abs_tol: float = 1e-12
    max_iters: Optional[int] = None
    monotone: bool = True
    stall_iters: Optional[int] = 50

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be nonnegative")


# Default for the outer solvers: raw iterates, which keep the decrease of
# the quadratic model that the outer descent arguments rely on.
SOLVER_CG = CgConfig(monotone=False)


@dataclass
class CgResult:
    x: np.ndarray
    iters: int
    converged: bool
    # "tolerance", "breakdown", "stalled" or "max_iters"
    status: str
    residual_norm: float
    initial_residual_norm: float
    history: Optional[list] = None


def cg_solve(op, rhs, x_start, cfg=CgConfig(), record_history=False):
    """Solve ``op x = rhs`` starting from ``x_start``.

    ``op`` is any object with ``rows``, ``cols`` and ``apply``.  The result
    is deterministic given its inputs.  A curvature breakdown
    (``p.op.p <= abs_tol * p.p``, which happens on the null space of a
    singular operator) returns the current iterate with
    ``status="breakdown"`` and ``converged=True``; callers that need a true
    solve must check ``residual_norm`` themselves.
    """
    if op.rows != op.cols:
        raise ValueError(f"CG needs a square operator, got {op.rows}x{op.cols}")
    n = op.cols
    rhs = np.asarray(rhs, dtype=float)
    x = np.array(x_start, dtype=float)
    if rhs.shape != (n,) or x.shape != (n,):
        raise ValueError(
            f"CG dimension mismatch: operator {n}x{n}, rhs {rhs.shape}, start {x.shape}"
        )
    max_iters = 10 * n if cfg.max_iters is None else cfg.max_iters

    r = rhs - op.apply(x)
    # dimensions are checked once above; skip per-step validation
    apply = op._apply if hasattr(op, "_apply") else op.apply
    rnorm = float(np.linalg.norm(r))
    if not np.isfinite(rnorm):
        raise NonFiniteError("non-finite initial residual in CG")
    r0 = rnorm
    target = max(cfg.rel_tol * r0, cfg.abs_tol)
    history = [rnorm] if record_history else None
    if rnorm <= target:
        return CgResult(x, 0, True, "tolerance", rnorm, r0, history)

    # (xs, rs) is the reported iterate: the smoothed one when monotone
    xs, rs, snorm = x, r, rnorm
    x_best, best_norm = x, rnorm
    p = r.copy()
    rr = rnorm * rnorm
    iters = 0
    best, since_best = rnorm, 0
    status = "max_iters"
    while iters < max_iters:
        Ap = apply(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp):
            raise NonFiniteError(f"non-finite curvature at CG iteration {iters}")
        if pAp <= cfg.abs_tol * float(p @ p):
            status = "breakdown"
            break
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
        iters += 1
        if cfg.monotone:
            d = r - rs
            dd = float(d @ d)
            eta = min(max(-float(rs @ d) / dd, 0.0), 1.0) if dd > 0.0 else 1.0
            xs = xs + eta * (x - xs)
            rs = rs + eta * d
            snorm = float(np.linalg.norm(rs))
        else:
            xs, rs, snorm = x, r, float(np.sqrt(rr))
        if not np.isfinite(snorm):
            raise NonFiniteError(f"non-finite residual at CG iteration {iters}")
        if record_history:
            history.append(snorm)
        if snorm <= target:
            status = "tolerance"
            break
        if snorm < best_norm:
            x_best, best_norm = xs, snorm
        if snorm < 0.999 * best:
            best, since_best = snorm, 0
        else:
            since_best += 1
            if cfg.stall_iters is not None and since_best >= cfg.stall_iters:
                status = "stalled"
                break
    if status in ("tolerance", "breakdown"):
        return CgResult(xs, iters, True, status, snorm, r0, history)
    return CgResult(x_best, iters, False, status, best_norm, r0, history)
