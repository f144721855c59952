"""Independent reference solver.

For positive definite ``H`` the dual

    min_u  f(u) + h(u),   f(u) = 1/2 (g + A^T u)^T H^{-1} (g + A^T u) - b^T u,
                          h(u) = sum_i supp(u_i | C_i) + indicator(||u_i|| <= 1)

is solved by FISTA with gradient-based adaptive restart, using a dense
Cholesky factor of ``H``.  ``h`` is the conjugate of ``dist(. | C)``, so
its prox follows from the Moreau identity:
``prox_{t h}(w) = r * min(t, 1 / ||r||)`` blockwise, with
``r = (I - P_C)(w / t)``.  The primal point is recovered as
``x = -H^{-1}(g + A^T u)`` and the pair certifies itself through the
duality gap.  Nothing here touches the IRWA or ADAL code.

Singular ``H`` falls back to a diminishing-step subgradient method on
``J0`` whose answer is only approximate (reported as such).
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class OracleResult:
    x: np.ndarray
    u: np.ndarray  # stacked dual point (None for the subgradient fallback)
    J: float
    gap: float
    converged: bool
    iterations: int
    method: str  # "dual-fista" or "subgradient"

    def pieces(self, problem):
        return problem.C.segments(self.u)


def _dual_parts(problem, Hchol):
    A = problem.A.to_dense() if problem.m else np.zeros((0, problem.n))

    def hinv(v):
        return np.linalg.solve(Hchol.T, np.linalg.solve(Hchol, v))

    HinvAT = hinv(A.T) if problem.m else np.zeros((problem.n, 0))
    Hinvg = hinv(problem.g)
    K = A @ HinvAT
    c = A @ Hinvg - problem.b
    return A, hinv, HinvAT, Hinvg, K, c


def _prox_conj(C, w, t):
    r = C.residual(w / t)
    d = C.block_norms(r)
    scale = np.minimum(t, np.divide(1.0, d, out=np.full_like(d, np.inf), where=d > 0))
    return C.expand(scale) * r


def _primal(problem, x):
    y = problem.A.to_dense() @ x + problem.b if problem.m else np.zeros(0)
    Hx = problem.H.apply(x)
    return float(problem.g @ x + 0.5 * x @ Hx + np.sum(problem.C.distances(y)))


def _dual(problem, u, Hinvg, HinvAT, g_dot_Hinvg, K):
    # 1/2 v^T H^{-1} v with v = g + A^T u, expanded to avoid another solve
    quad = 0.5 * (g_dot_Hinvg + 2.0 * (problem.g @ (HinvAT @ u)) + u @ (K @ u))
    return float(quad - problem.b @ u + np.sum(problem.C.support(u)))


def oracle_solve(problem, iters=200_000, tol=1e-9, check_every=25):
    """Reference ``(x*, u*, J*)``; ``converged`` means the certified gap is
    at most ``tol * max(1, |J*|)``."""
    Hd = problem.H.to_dense()
    Hd = 0.5 * (Hd + Hd.T)
    try:
        Hchol = np.linalg.cholesky(Hd)
        if np.min(np.diag(Hchol)) <= 1e-10 * np.max(np.diag(Hchol)):
            raise np.linalg.LinAlgError("numerically singular")
    except np.linalg.LinAlgError:
        return subgradient_solve(problem, iters)

    m, C = problem.m, problem.C
    A, hinv, HinvAT, Hinvg, K, c = _dual_parts(problem, Hchol)
    g_dot = float(problem.g @ Hinvg)
    if m == 0:
        x = -Hinvg
        return OracleResult(x, np.zeros(0), _primal(problem, x), 0.0, True, 0, "dual-fista")
    Lf = max(float(np.linalg.eigvalsh(0.5 * (K + K.T))[-1]), 1e-300)
    t = 1.0 / Lf

    u = np.zeros(m)
    y = u.copy()
    theta = 1.0
    best = None
    for k in range(1, iters + 1):
        grad = K @ y + c
        u_new = _prox_conj(C, y - t * grad, t)
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        if (y - u_new) @ (u_new - u) > 0:
            # gradient restart: momentum points uphill
            theta_new = 1.0
            y = u_new.copy()
        else:
            y = u_new + ((theta - 1.0) / theta_new) * (u_new - u)
        u, theta = u_new, theta_new
        if k % check_every == 0 or k == iters:
            x = -(Hinvg + HinvAT @ u)
            J = _primal(problem, x)
            gap = J + _dual(problem, u, Hinvg, HinvAT, g_dot, K)
            if best is None or gap < best.gap:
                best = OracleResult(x, u.copy(), J, gap, False, k, "dual-fista")
            if gap <= tol * max(1.0, abs(J)):
                best.converged = True
                return best
    return best


def subgradient_solve(problem, iters=200_000, x0=None, step0=None):
    """Diminishing-step subgradient method on ``J0``; best iterate wins.

    Accuracy is not certified, so ``converged`` is always ``False`` and
    callers should treat ``J`` as good to about 1e-4 relative at best.
    """
    n, C = problem.n, problem.C
    A = problem.A.to_dense() if problem.m else np.zeros((0, n))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    best_x, best_J = x.copy(), _primal(problem, x)
    scale = step0 if step0 is not None else max(1.0, np.linalg.norm(x)) / max(1.0, np.linalg.norm(A, 2))
    for k in range(iters):
        yk = A @ x + problem.b
        sg = problem.g + problem.H.apply(x) + A.T @ C.subgradient_of_distance(yk)
        nrm = np.linalg.norm(sg)
        if nrm == 0.0:
            break
        x = x - (scale / np.sqrt(k + 1.0)) * sg / nrm
        J = _primal(problem, x)
        if J < best_J:
            best_x, best_J = x.copy(), J
    return OracleResult(best_x, None, best_J, np.nan, False, iters, "subgradient")
