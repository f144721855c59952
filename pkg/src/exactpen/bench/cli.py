"""``exactpen`` command line: gen, solve, oracle, batch.

Exit status is 0 on success and 1 when any solve is flagged (iteration
cap reached, gap threshold missed, or an error recorded in a batch).
"""

import argparse
import json
import sys

import numpy as np

from ..report import write_trace_csv
from .batch import run_batch
from .generators import gen_experiment1, gen_experiment2, gen_l1svm
from .io import _encode, dumps, read_problem, write_problem
from .oracle import oracle_solve
from .solvers import SOLVER_NAMES, build_solver, family_params


def _add_solver_flags(ap):
    ap.add_argument("--solver", choices=SOLVER_NAMES, default="irwa")
    ap.add_argument("--mu", type=float)
    ap.add_argument("--eps0", type=float)
    ap.add_argument("--eta", type=float)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--bigM", type=float, dest="M")
    ap.add_argument("--sigma", type=float)
    ap.add_argument("--sigma-prime", type=float)
    ap.add_argument("--sigma-dprime", type=float)
    ap.add_argument("--gap-reduction", type=float, metavar="FRACTION",
                    help="stop when the gap is this fraction of the reference gap (0.05 = 95%% reduction)")
    ap.add_argument("--max-iters", type=int)
    ap.add_argument("--cg-rtol", type=float, default=0.1)


def _overrides(args):
    keys = ("mu", "eps0", "eta", "gamma", "M", "sigma", "sigma_prime", "sigma_dprime", "max_iters")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_gen(args):
    if args.family == "exp1":
        doc = gen_experiment1(args.seed, args.m_eq, args.m_ineq, args.n)
    elif args.family == "exp2":
        doc = gen_experiment2(args.seed, args.j)
    else:
        doc = gen_l1svm(args.seed, args.j, args.lam, args.m, args.s, args.t)
    if args.out in (None, "-"):
        sys.stdout.write(dumps(doc) + "\n")
    else:
        write_problem(doc, args.out)
    return 0


def cmd_solve(args):
    problem, doc = read_problem(args.problem)
    params = family_params(doc, args.solver)
    params.update(_overrides(args))
    seed = doc.get("meta", {}).get("seed")
    solve = build_solver(args.solver, params, args.gap_reduction, args.cg_rtol)
    report = solve(problem)
    if args.out:
        write_trace_csv(report, args.out, seed=seed)
    summary = {
        "solver": report.solver, "status": report.status, "seed": seed,
        "iterations": report.iterations, "cg_steps": report.cumulative_cg,
        "cg_unconverged": report.cg_unconverged,
        "J0": report.J0, "dual_obj": report.dual_obj, "gap": report.gap,
        "gap_reference": report.gap_reference,
    }
    if args.print_x:
        summary["x"] = report.x
    sys.stdout.write(json.dumps(_encode(summary)) + "\n")
    return 1 if report.flagged else 0


def cmd_oracle(args):
    problem, _ = read_problem(args.problem)
    res = oracle_solve(problem, iters=args.iters)
    out = {"method": res.method, "converged": res.converged, "iterations": res.iterations,
           "J": res.J, "gap": res.gap, "x": res.x, "u": res.u if res.u is not None else []}
    _emit(json.dumps(_encode(out)), args.out)
    return 0 if res.converged else 1


def cmd_batch(args):
    if args.descriptor:
        with open(args.descriptor) as fh:
            desc = json.load(fh)
    else:
        if args.generator == "exp1":
            gen_args = {"m_eq": args.m_eq, "m_ineq": args.m_ineq, "n": args.n}
        elif args.generator == "exp2":
            gen_args = {"j": args.j}
        else:
            gen_args = {"j": args.j, "lam": args.lam}
        desc = {
            "generator": args.generator, "gen_args": gen_args,
            "seeds": list(range(args.seed, args.seed + args.count)),
            "solvers": args.solvers.split(","),
            "thresholds": [float(t) / 100.0 if float(t) > 1 else float(t) for t in args.thresholds.split(",")],
            "cg_rtol": args.cg_rtol,
            "params": _overrides(args),
        }
    result = run_batch(desc, out_dir=args.out)
    n = len(desc["seeds"])
    for name in desc["solvers"]:
        reached = {}
        for r in result.rows:
            if r["solver"] == name and r["cg_steps"] is not None:
                reached.setdefault(r["threshold"], []).append(r["cg_steps"])
        for thr in sorted(reached):
            v = reached[thr]
            sys.stdout.write(f"{name:12s} {thr:5.0%}: {len(v)}/{n} solved, max CG {max(v)}, median CG {int(np.median(v))}\n")
    for e in result.errors:
        sys.stderr.write(e + "\n")
    return 0 if result.ok else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="exactpen", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random problem file")
    g.add_argument("family", choices=("exp1", "exp2", "svm"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--m-eq", type=int, default=300)
    g.add_argument("--m-ineq", type=int, default=300)
    g.add_argument("--j", type=int, default=1)
    g.add_argument("--lam", type=float, default=50.0)
    g.add_argument("--m", type=int, help="svm: number of samples (overrides the j formula)")
    g.add_argument("--s", type=int, help="svm: informative features")
    g.add_argument("--t", type=int, help="svm: noise features")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve a problem file and write the trace CSV")
    s.add_argument("problem")
    _add_solver_flags(s)
    s.add_argument("--out", help="trace CSV path")
    s.add_argument("--print-x", action="store_true")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="reference solution by dual FISTA")
    o.add_argument("problem")
    o.add_argument("--iters", type=int, default=200_000)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("batch", help="run a seeded batch and write efficiency curves")
    b.add_argument("--descriptor", help="JSON batch descriptor (overrides the flags below)")
    b.add_argument("--generator", choices=("exp1", "exp2", "svm"), default="exp1")
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--n", type=int, default=100)
    b.add_argument("--m-eq", type=int, default=30)
    b.add_argument("--m-ineq", type=int, default=30)
    b.add_argument("--j", type=int, default=1)
    b.add_argument("--lam", type=float, default=50.0)
    b.add_argument("--solvers", default="irwa,adal")
    b.add_argument("--thresholds", default="50,75,90,95")
    for flag, kw in (("--mu", {}), ("--eps0", {}), ("--eta", {}), ("--gamma", {}),
                     ("--bigM", {"dest": "M"}), ("--max-iters", {"type": int})):
        b.add_argument(flag, type=kw.pop("type", float), **kw)
    b.add_argument("--cg-rtol", type=float, default=0.1)
    b.add_argument("--out", help="output directory for results.csv and efficiency.csv")
    b.set_defaults(func=cmd_batch)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"exactpen: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
