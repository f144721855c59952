"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a one-line verdict that the terminal summary prints
under "acceptance criteria", whether or not the assertion holds.
"""

import time

import numpy as np
import pytest
from scipy.optimize import minimize

from exactpen.adal import AdalConfig, adal_solve
from exactpen.bench.batch import run_batch
from exactpen.bench.generators import gen_experiment1, gen_experiment2, gen_l1svm, svm_objective
from exactpen.bench.io import dumps, problem_from_dict
from exactpen.bench.oracle import oracle_solve
from exactpen.bench.solvers import SOLVER_NAMES, build_solver, family_params
from exactpen.cg import CgConfig
from exactpen.irwa import IrwaConfig, StepAndEps, irwa_solve


import conftest
from conftest import random_eqineq
from test_sets import random_set, sample_member

TIGHT_CG = CgConfig(rel_tol=1e-10, monotone=False, stall_iters=10)

# runs shared between criteria: (label, problem, report)
IRWA_TIGHT_RUNS = []
DUAL_RUNS = []


def record(n, ok, detail):
    conftest.ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def max_block_norm(p, reports, skip_first=False):
    worst = 0.0
    for rep in reports:
        for u in rep.duals[1 if skip_first else 0:]:
            if p.m:
                worst = max(worst, float(np.max(p.C.block_norms(u))))
    return worst


# 1

@pytest.fixture(scope="module")
def oracle_runs():
    problems = [random_eqineq(s, n=10, m_eq=6, m_ineq=6) for s in range(20)]
    refs = [oracle_solve(p) for p in problems]
    assert all(r.converged for r in refs)
    irwa_cfg = IrwaConfig(eps0=1.0, eta=0.96, M=1e4, sigma=1e-8, sigma_prime=1e-8, variant="eqineq",
                          max_iters=20_000, cg=TIGHT_CG, record_iterates=True)
    adal_cfg = AdalConfig(mu=1.0, sigma=1e-8, sigma_dprime=1e-8, max_iters=20_000,
                          cg=CgConfig(rel_tol=1e-10, monotone=False, stall_iters=5), record_iterates=True)
    out = {"problems": problems, "refs": refs, "irwa": [], "adal": [], "seconds": 0.0}
    for p in problems:
        t0 = time.perf_counter()
        a = irwa_solve(p, irwa_cfg)
        b = adal_solve(p, adal_cfg)
        out["seconds"] += time.perf_counter() - t0
        out["irwa"].append(a)
        out["adal"].append(b)
        IRWA_TIGHT_RUNS.append(("c1", p, a))
        DUAL_RUNS.append(("irwa", p, a))
        DUAL_RUNS.append(("adal", p, b))
    return out


def test_criterion_01_oracle_equivalence(oracle_runs):
    rel = lambda rep, ref: abs(rep.J0 - ref.J) / max(abs(ref.J), 1e-300)
    e_irwa = [rel(r, o) for r, o in zip(oracle_runs["irwa"], oracle_runs["refs"])]
    e_adal = [rel(r, o) for r, o in zip(oracle_runs["adal"], oracle_runs["refs"])]
    secs = oracle_runs["seconds"]
    ok = max(e_irwa) <= 1e-4 and max(e_adal) <= 1e-4 and secs < 10.0
    record(1, ok, f"max rel error IRWA {max(e_irwa):.1e}, ADAL {max(e_adal):.1e}; solver time {secs:.1f} s (limit 10 s)")


# 5 (its run also feeds criterion 2)

def complexity_setup():
    p = random_eqineq(21, n=5, m_eq=2, m_ineq=2)
    eps = np.full(p.l, 0.5)  # at most 1, so the weights stay below 1/min(eps)
    big_eps = 2.0 * np.sum(eps)  # ||eps||_1 <= big/2 and big <= 4 l min(eps)
    A, H = p.A.to_dense(), p.H.to_dense()

    def J(x):
        return p.eval_J(x, eps)

    def grad(x):
        # every piece is one row here, so weights and residuals line up
        res = p.C.residual(p.affine(x))
        return p.g + H @ x + A.T @ (p.weights(x, eps) * res)

    x_eps = minimize(J, np.zeros(p.n), jac=grad, method="BFGS", options={"gtol": 1e-13, "maxiter": 10_000}).x
    assert np.linalg.norm(grad(x_eps)) <= 1e-8
    consts = {
        "sigma0_sq": float(np.linalg.eigvalsh(H + A.T @ A)[-1]),
        "sigma1": max(np.linalg.norm(pc.A.to_dense(), 2) for pc in p.pieces),
        "lam": float(np.linalg.eigvalsh(H)[-1]),
        "l": p.l,
        "u_eps": float(np.linalg.norm(grad(x_eps))),
    }
    return p, eps, big_eps, x_eps, consts


def complexity_bound(k, big, tau, c):
    s0, s1, lam, l, u = c["sigma0_sq"], c["sigma1"], c["lam"], c["l"], c["u_eps"]
    lead = 32 * l ** 2 * s0 * tau ** 2 / (k * big)
    num = u * big + tau * (lam * big + l * s1 ** 2)
    den = u * big + tau * (lam * big + 4 * l ** 2 * s1 ** 2) + 8 * l * tau * s0 / k
    return lead * num / den


def test_criterion_05_fixed_eps_complexity_envelope():
    p, eps, big, x_eps, c = complexity_setup()
    cfg = IrwaConfig(eps0=eps, variant="fixed_eps", sigma=0.0, max_iters=200,
                     cg=CgConfig(rel_tol=1e-12, monotone=False, stall_iters=10), record_iterates=True)
    rep = irwa_solve(p, cfg)
    IRWA_TIGHT_RUNS.append(("c5", p, rep))
    DUAL_RUNS.append(("irwa", p, rep))
    xs = list(rep.iterates)
    if rep.status == "step":
        # sigma = 0 stops only on an exact fixed point, where later
        # iterates would all repeat the last one
        xs += [xs[-1]] * (201 - len(xs))
    tau = max(np.linalg.norm(x - x_eps) for x in xs)
    J_eps = p.eval_J(x_eps, eps)
    worst, bad = -np.inf, 0
    ks = range(1, len(xs))
    for k in ks:
        delta = p.eval_J(xs[k], eps) - J_eps
        bound = complexity_bound(k, big, tau, c)
        worst = max(worst, delta / bound)
        bad += delta > bound
    ok = bad == 0 and len(ks) == 200
    record(5, ok, f"k = 1..{len(ks)} ({rep.iterations} solver steps): {bad} violations, "
                  f"max delta/bound {worst:.2e} (tau {tau:.3g})")


# 4

def test_criterion_04_omega_monotone():
    mu, worst_mono, worst_dec, checked = 1.0, np.inf, np.inf, 0
    for seed in range(5):
        p = random_eqineq(seed, n=6, m_eq=3, m_ineq=3)
        ref = oracle_solve(p)
        rep = adal_solve(p, AdalConfig(mu=mu, sigma=1e-10, sigma_dprime=1e-10, max_iters=400,
                                       cg=CgConfig(rel_tol=1e-12, monotone=False, stall_iters=None),
                                       record_iterates=True))
        DUAL_RUNS.append(("adal", p, rep))
        xs, us, ps = rep.iterates, rep.extra["u_iterates"], rep.extra["p_iterates"]
        omega = [np.sum(p.A.apply(x - ref.x) ** 2) / mu + mu * np.sum((u - ref.u) ** 2) for x, u in zip(xs, us)]
        for k in range(1, len(omega) - 1):
            z = p.affine(xs[k + 1]) - ps[k + 1]
            q = p.A.apply(xs[k + 1] - xs[k])
            worst_mono = min(worst_mono, omega[k] - omega[k + 1] + 1e-8 * omega[1])
            worst_dec = min(worst_dec, omega[k] - omega[k + 1] - (z @ z + q @ q) / mu + 1e-8)
            checked += 1
    ok = worst_mono >= 0 and worst_dec >= 0
    record(4, ok, f"{checked} steps on 5 instances; min slack: monotone {worst_mono:.1e}, decrease {worst_dec:.1e}")


# 6

@pytest.fixture(scope="module")
def experiment1_batch(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp1")
    desc = {"generator": "exp1", "gen_args": {"m_eq": 30, "m_ineq": 30, "n": 100},
            "seeds": list(range(50)), "solvers": ["irwa-eqineq", "adal"],
            "thresholds": [0.5, 0.75, 0.9, 0.95], "cg_rtol": 0.1}
    t0 = time.perf_counter()
    res = run_batch(desc, out_dir=out, keep_reports=True)
    seconds = time.perf_counter() - t0
    for (seed, name), rep in zip(((s, n) for s in desc["seeds"] for n in desc["solvers"]), res.reports):
        if rep is not None:
            p = problem_from_dict(gen_experiment1(seed, 30, 30, 100))
            DUAL_RUNS.append((name.split("-")[0], p, rep))
    return res, seconds, out


def test_criterion_06_scaled_experiment1(experiment1_batch):
    res, seconds, out = experiment1_batch
    counts = {}
    for name in ("irwa-eqineq", "adal"):
        steps = [r["cg_steps"] for r in res.rows if r["solver"] == name and r["threshold"] == 0.95]
        counts[name] = sum(s is not None and s <= 2000 for s in steps)
    curve = (out / "efficiency.csv").read_text().splitlines()
    ok = all(c >= 49 for c in counts.values()) and len(curve) > 2 and seconds < 60 and not res.errors
    record(6, ok, f"95% gap reduction within 2000 CG steps: IRWA {counts['irwa-eqineq']}/50, "
                  f"ADAL {counts['adal']}/50; {len(curve) - 2} curve rows; {seconds:.1f} s (limit 60 s)")


# 7

def test_criterion_07_acceleration_benefit():
    j_ok = cg_lower = 0
    for seed in range(20):
        doc = gen_experiment1(seed, 30, 30, 100)
        p = problem_from_dict(doc)
        params = {k: v for k, v in family_params(doc, "irwa").items() if k in ("eta", "M", "gamma", "eps0")}
        base = dict(params, variant="eqineq", sigma=1e-6, sigma_prime=1e-6, stop_rule=StepAndEps(),
                    max_iters=500, cg=CgConfig(rel_tol=0.1, monotone=False), record_iterates=True)
        plain = irwa_solve(p, IrwaConfig(**base))
        acc = irwa_solve(p, IrwaConfig(**base, accelerated=True))
        DUAL_RUNS.append(("irwa", p, plain))
        DUAL_RUNS.append(("irwa", p, acc))
        j_ok += acc.J0 <= plain.J0 + 1e-6
        cg_lower += acc.cumulative_cg < plain.cumulative_cg
    ok = j_ok >= 16 and cg_lower >= 12
    record(7, ok, f"accelerated J0 no worse on {j_ok}/20 (need 16), fewer CG steps on {cg_lower}/20 (need 12)")


# 8

def test_criterion_08_scaled_svm():
    found = total = 0
    worst_obj = 0.0
    for seed in range(5):
        doc = gen_l1svm(seed, 0, lam=50.0, m=60, s=9, t=40)
        p = problem_from_dict(doc)
        solve = build_solver("irwa-eqineq", family_params(doc, "irwa-eqineq"), cg_rtol=0.1,
                             track_dual=False, record_iterates=True)
        rep = solve(p)
        DUAL_RUNS.append(("irwa", p, rep))
        s = doc["meta"]["s"]
        found += int(np.sum(np.abs(rep.x[:s]) > 1e-3))
        total += s
        X, y, lam = np.array(doc["meta"]["X"]), np.array(doc["meta"]["y"]), doc["meta"]["lam"]
        for x in rep.iterates:
            direct = svm_objective(X, y, lam, x)
            worst_obj = max(worst_obj, abs(p.eval_J0(x) - direct) / max(1.0, abs(direct)))
    ok = found >= 0.7 * total and worst_obj <= 1e-10
    record(8, ok, f"planted support recovered {found}/{total} ({found / total:.0%}, need 70%); "
                  f"max objective mismatch {worst_obj:.1e}")


# 2 and 3 gather the runs above

def test_criterion_02_monotone_descent(oracle_runs):
    # plain IRWA on the same instances joins the tight-CG runs
    for p in oracle_runs["problems"]:
        rep = irwa_solve(p, IrwaConfig(eps0=1.0, eta=0.9, sigma=1e-8, sigma_prime=1e-8, max_iters=300,
                                       cg=TIGHT_CG, record_iterates=True))
        IRWA_TIGHT_RUNS.append(("plain", p, rep))
        DUAL_RUNS.append(("irwa", p, rep))
    violations = steps = 0
    for _, _, rep in IRWA_TIGHT_RUNS:
        J = [row.J_model for row in rep.trace]
        violations += sum(b > a + 1e-8 for a, b in zip(J, J[1:]))
        steps += len(J) - 1
    ok = violations == 0 and len(IRWA_TIGHT_RUNS) >= 41
    record(2, ok, f"{violations} violations over {steps} steps in {len(IRWA_TIGHT_RUNS)} IRWA runs")


def test_criterion_03_dual_feasibility_everywhere(oracle_runs, experiment1_batch):
    worst_irwa = worst_adal = 0.0
    worst_gap = np.inf
    runs = 0
    for kind, p, rep in DUAL_RUNS:
        runs += 1
        if kind == "irwa":
            worst_irwa = max(worst_irwa, max_block_norm(p, [rep]))
        else:
            worst_adal = max(worst_adal, max_block_norm(p, [rep], skip_first=True))
        gaps = [row.gap for row in rep.trace if np.isfinite(row.gap)]
        if gaps:
            worst_gap = min(worst_gap, min(gaps))
    ok = worst_irwa <= 1 + 1e-12 and worst_adal <= 1 + 1e-10 and worst_gap >= -1e-8 and runs > 0
    record(3, ok, f"{runs} runs: max block norm IRWA {worst_irwa:.15f}, ADAL {worst_adal:.15f}; "
                  f"min gap {worst_gap:.1e}")


# 9

SHAPES = ["zero", "nonpos", "box", "point", "ball"]


def test_criterion_09_set_properties():
    failures, cases = {}, 0
    for shape in SHAPES:
        failures[shape] = 0
        for case in range(100):
            rng = np.random.default_rng([9, SHAPES.index(shape), case])
            s = random_set(shape, int(rng.integers(1, 6)), rng)
            y, z = rng.standard_normal(s.dim) * 3, rng.standard_normal(s.dim) * 3
            Py, Pz = s.project(y), s.project(z)
            member = sample_member(s, rng)
            u = rng.standard_normal(s.dim)
            checks = [
                np.sum((Py - Pz) ** 2) + np.sum(((y - Py) - (z - Pz)) ** 2) <= np.sum((y - z) ** 2) + 1e-12,
                np.allclose(s.project(Py), Py, rtol=0, atol=1e-14),
                (y - Py) @ (member - Py) <= 1e-12 * max(1.0, np.linalg.norm(y - Py) * np.linalg.norm(member - Py)),
                s.support(u) >= u @ member - 1e-12 * max(1.0, abs(u @ member)),
            ]
            failures[shape] += not all(checks)
            cases += 1
    ok = sum(failures.values()) == 0
    record(9, ok, f"{cases} cases over {len(SHAPES)} shapes, failures {failures}")


# 10

def test_criterion_10_determinism():
    mismatches = []
    gens = {"exp1": lambda: gen_experiment1(4, 5, 5, 20), "exp2": lambda: gen_experiment2(4, 1),
            "svm": lambda: gen_l1svm(4, 0, m=20, s=3, t=5)}
    for name, gen in gens.items():
        if dumps(gen()) != dumps(gen()):
            mismatches.append(name)
    doc = gen_experiment1(4, 5, 5, 20)
    p = problem_from_dict(doc)
    strip = lambda rep: [tuple(v for k, v in vars(r).items() if k != "wall_ns") for r in rep.trace]
    for name in SOLVER_NAMES:
        solve = build_solver(name, dict(family_params(doc, name), max_iters=200))
        a, b = solve(p), solve(p)
        if not (np.array_equal(a.x, b.x) and repr(strip(a)) == repr(strip(b))):
            mismatches.append(name)
    ok = not mismatches
    record(10, ok, f"{len(gens)} generators and {len(SOLVER_NAMES)} solvers repeated; mismatches {mismatches or 'none'}")
