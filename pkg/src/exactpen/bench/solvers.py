"""Named solver configurations shared by the CLI and the batch runner."""

from ..adal import AdalConfig, StepAndResidual, adal_solve
from ..cg import CgConfig
from ..irwa import GapReduction, IrwaConfig, StepAndEps, irwa_solve

SOLVER_NAMES = ("irwa", "irwa-acc", "irwa-eqineq", "irwa-eqineq-acc", "adal", "adal-acc")

_IRWA_KEYS = ("eta", "gamma", "M", "eps0", "sigma", "sigma_prime", "max_iters")
_ADAL_KEYS = ("mu", "sigma", "sigma_dprime", "max_iters")


def build_solver(name, params=None, gap_reduction=None, cg_rtol=0.1, track_dual=True, record_iterates=False):
    """Return ``solve(problem) -> SolveReport`` for a solver name.

    ``params`` may hold any of ``eta, gamma, M, eps0, mu, sigma,
    sigma_prime, sigma_dprime, max_iters``; keys the solver does not use
    are ignored.  ``gap_reduction`` (the remaining gap fraction, e.g. 0.05)
    switches to gap-based stopping.
    """
    if name not in SOLVER_NAMES:
        raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")
    params = {k: v for k, v in (params or {}).items() if v is not None}
    cg = CgConfig(rel_tol=cg_rtol, monotone=False)
    if name.startswith("irwa"):
        kw = {k: params[k] for k in _IRWA_KEYS if k in params}
        stop = GapReduction(gap_reduction) if gap_reduction is not None else StepAndEps()
        cfg = IrwaConfig(
            **kw, stop_rule=stop, cg=cg, track_dual=track_dual, record_iterates=record_iterates,
            accelerated=name.endswith("-acc"),
            variant="eqineq" if name.startswith("irwa-eqineq") else "plain",
        )
        return lambda problem: irwa_solve(problem, cfg)
    kw = {k: params[k] for k in _ADAL_KEYS if k in params}
    stop = GapReduction(gap_reduction) if gap_reduction is not None else StepAndResidual()
    cfg = AdalConfig(**kw, stop_rule=stop, cg=cg, track_dual=track_dual,
                     record_iterates=record_iterates, accelerated=name == "adal-acc")
    return lambda problem: adal_solve(problem, cfg)


def family_params(doc, solver):
    """Solver parameters recorded by the generator in ``doc["meta"]``.

    The SVM family keeps separate ADAL tolerances (``adal_sigma``,
    ``adal_max_iters``) because the two solvers were run with different
    settings there.
    """
    params = dict(doc.get("meta", {}).get("params", {}))
    if solver.startswith("adal"):
        if "adal_sigma" in params:
            params["sigma"] = params.pop("adal_sigma")
        if "adal_max_iters" in params:
            params["max_iters"] = params.pop("adal_max_iters")
    params.pop("adal_sigma", None)
    params.pop("adal_max_iters", None)
    return params
