import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactpen import linop
from exactpen.bench.batch import CURVE_COLUMNS, RESULT_COLUMNS, run_batch
from exactpen.bench.cli import main
from exactpen.bench.generators import (
    experiment2_sizes, gen_experiment1, gen_experiment2, gen_l1svm, inverse_gamma, make_rng,
    svm_objective,
)
from exactpen.bench.io import dumps, problem_from_dict, problem_to_dict, read_problem, write_problem
from exactpen.bench.oracle import oracle_solve
from exactpen.bench.solvers import SOLVER_NAMES, build_solver, family_params
from exactpen.irwa import IrwaConfig, irwa_solve
from exactpen.problem import PenaltyProblem
from exactpen.report import TRACE_COLUMNS, write_trace_csv
from exactpen.sets import Ball2, Box, NonPosOrthant, Point, ZeroPoint

from conftest import one_var_equality, random_eqineq
from test_problem import mixed_problem

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def read_csv(path):
    with open(path) as fh:
        header = fh.readline()
        return header, list(csv.DictReader(fh))


# problem files

def test_round_trip_is_bit_identical(tmp_path):
    p = mixed_problem(3)
    doc = problem_to_dict(p, meta={"seed": 3})
    path = tmp_path / "p.json"
    write_problem(doc, path)
    q, doc2 = read_problem(path)
    assert dumps(doc2) == dumps(doc)
    x = np.random.default_rng(0).standard_normal(p.n)
    assert q.eval_J0(x) == p.eval_J0(x)
    assert np.array_equal(q.H.to_dense(), p.H.to_dense())


def test_infinite_bounds_survive_round_trip(tmp_path):
    p = PenaltyProblem(np.zeros(2), linop.identity(2), linop.identity(2), np.zeros(2),
                       [Box([-np.inf, 0.0], [1.0, np.inf])])
    write_problem(p, tmp_path / "box.json")
    q, doc = read_problem(tmp_path / "box.json")
    assert doc["pieces"][0]["set"]["lo"][0] == "-inf"
    y = np.array([-5.0, 7.0])
    np.testing.assert_array_equal(q.C.project(y), p.C.project(y))


def test_every_operator_and_set_type_round_trips(tmp_path):
    rng = np.random.default_rng(1)
    n = 4
    H = linop.LowRankPlusDiagMap(np.full(n, 0.5), rng.standard_normal((n, 2)), np.array([1.0, 2.0]))
    pieces_sets = [ZeroPoint(1), NonPosOrthant(2), Point([1.0]), Ball2([0.0, 1.0], 2.0)]
    from exactpen.problem import ConvexPiece
    pieces = [
        ConvexPiece(linop.SparseTripletMap(1, n, [0], [2], [3.0]), [0.5], pieces_sets[0]),
        ConvexPiece(linop.dense(rng.standard_normal((2, n))), [0.0, 1.0], pieces_sets[1]),
        ConvexPiece(linop.dense(rng.standard_normal((1, n))), [0.0], pieces_sets[2]),
        ConvexPiece(linop.dense(rng.standard_normal((2, n))), [1.0, -1.0], pieces_sets[3]),
    ]
    for Hop in (H, linop.diagonal(1.0, 2.0, 3.0, 4.0), linop.ZeroMap(n, n), linop.dense(np.eye(n))):
        p = PenaltyProblem.from_pieces(rng.standard_normal(n), Hop, pieces)
        write_problem(p, tmp_path / "p.json")
        q, _ = read_problem(tmp_path / "p.json")
        x = rng.standard_normal(n)
        assert q.eval_J0(x) == pytest.approx(p.eval_J0(x), rel=1e-15)


def test_bad_documents_are_rejected():
    doc = gen_experiment1(0, 2, 2, 3)
    with pytest.raises(ValueError, match="format"):
        problem_from_dict({**doc, "format": "other/9"})
    bad = json.loads(json.dumps(doc))
    bad["pieces"][0]["b"] = [1.0, 2.0]
    with pytest.raises(ValueError, match="piece 0"):
        problem_from_dict(bad)


# generators

def test_experiment1_default_shape_and_determinism():
    doc = gen_experiment1(0, 3, 3, 10)
    assert dumps(doc) == dumps(gen_experiment1(0, 3, 3, 10))
    assert dumps(doc) != dumps(gen_experiment1(1, 3, 3, 10))
    p = problem_from_dict(doc)
    assert (p.m, p.n) == (6, 10)
    assert doc["meta"]["seed"] == 0 and doc["meta"]["rng"] == "numpy.PCG64"


def test_experiment1_full_size():
    p = problem_from_dict(gen_experiment1(0))
    assert (p.A.rows, p.A.cols) == (600, 1000)


@settings(max_examples=20)
@given(seeds)
def test_experiment1_H_bounded_below(seed):
    p = problem_from_dict(gen_experiment1(seed % 1000, 2, 2, 12))
    x = np.random.default_rng(seed).standard_normal(12)
    assert x @ p.H.apply(x) >= 0.1 * x @ x - 1e-8


def test_experiment2_sizes_and_positive_D():
    assert experiment2_sizes(1) == (200, 100)
    assert experiment2_sizes(3) == (1200, 600)
    doc = gen_experiment2(4, 1)
    assert doc["n"] == 200 and sum(pc["rows"] for pc in doc["pieces"]) == 100
    assert min(doc["H"]["inner"]) > 0
    assert np.all(inverse_gamma(make_rng(0), 0.5, 1.0, 1000) > 0)
    with pytest.raises(ValueError):
        gen_experiment2(0, 0)


def test_svm_sizes_and_encoding():
    doc = gen_l1svm(0, 0)
    meta = doc["meta"]
    assert (meta["s"], meta["m"], meta["t"]) == (19, 200, 200)
    assert doc["n"] == 219
    p = problem_from_dict(doc)
    X, y = np.array(meta["X"]), np.array(meta["y"])
    rng = np.random.default_rng(0)
    for _ in range(100):
        beta = rng.standard_normal(p.n) * rng.choice([0.01, 1.0, 10.0])
        direct = svm_objective(X, y, meta["lam"], beta)
        assert p.eval_J0(beta) == pytest.approx(direct, rel=1e-10, abs=1e-10)


def test_svm_zero_lambda_separable_data_reaches_zero():
    doc = gen_l1svm(2, 0, lam=0.0, m=30, s=4, t=3)
    p = problem_from_dict(doc)
    beta = np.concatenate([np.array(doc["meta"]["beta_hat"], dtype=float), np.zeros(3)])
    # labels come from the planted direction; scaling it makes every margin at least one
    X, y = np.array(doc["meta"]["X"]), np.array(doc["meta"]["y"])
    beta *= 1.0 / np.min(y * (X @ beta))
    assert p.eval_J0(beta) == pytest.approx(0.0, abs=1e-9)


# oracle

def test_oracle_one_var_instance():
    res = oracle_solve(one_var_equality())
    assert res.converged and res.gap <= 1e-8
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)
    grid = np.linspace(-2, 3, 50_001)
    J = 0.5 * grid ** 2 + np.abs(grid - 1)
    assert grid[np.argmin(J)] == pytest.approx(res.x[0], abs=1e-4)


def test_oracle_trivial():
    p = PenaltyProblem(np.zeros(3), linop.identity(3), None, [], [])
    res = oracle_solve(p)
    assert res.J == 0.0 and np.array_equal(res.x, np.zeros(3))


def test_oracle_is_a_lower_bound(rng):
    p = random_eqineq(8, n=8, m_eq=4, m_ineq=4)
    res = oracle_solve(p)
    assert res.converged
    for _ in range(1000):
        x = res.x + rng.standard_normal(8) * 10.0 ** rng.uniform(-4, 1)
        assert p.eval_J0(x) >= res.J - 1e-9 * max(1.0, abs(res.J))


def test_oracle_matches_conic_solver():
    cp = pytest.importorskip("cvxpy")
    p = mixed_problem(11)
    res = oracle_solve(p)
    x = cp.Variable(p.n)
    objective = p.g @ x + 0.5 * cp.quad_form(x, cp.psd_wrap(p.H.to_dense()))
    constraints = []
    for pc in p.pieces:
        # dist(y | C) as min ||y - z|| over members z
        z = cp.Variable(pc.A.rows)
        objective = objective + cp.norm(pc.A.to_dense() @ x + pc.b - z)
        s = pc.C
        if isinstance(s, ZeroPoint):
            constraints.append(z == 0)
        elif isinstance(s, NonPosOrthant):
            constraints.append(z <= 0)
        elif isinstance(s, Ball2):
            constraints.append(cp.norm(z - s.center) <= s.radius)
        else:
            lo, hi = np.isfinite(s.lo), np.isfinite(s.hi)
            constraints += [z[lo] >= s.lo[lo], z[hi] <= s.hi[hi]]
    value = cp.Problem(cp.Minimize(objective), constraints).solve()
    assert res.J == pytest.approx(value, rel=1e-5, abs=1e-6)


# solver registry

def test_solver_registry():
    assert set(SOLVER_NAMES) >= {"irwa", "irwa-acc", "irwa-eqineq", "adal", "adal-acc"}
    with pytest.raises(ValueError, match="unknown solver"):
        build_solver("newton")
    doc = gen_l1svm(0, 0, m=10, s=2, t=2)
    assert family_params(doc, "adal")["sigma"] == 0.05
    assert family_params(doc, "irwa")["sigma"] == 1e-4
    assert "adal_sigma" not in family_params(doc, "irwa")


# traces and batches

def test_trace_csv_columns_and_precision(tmp_path):
    p = random_eqineq(0)
    rep = irwa_solve(p, IrwaConfig(eps0=1.0, max_iters=5))
    path = tmp_path / "t.csv"
    write_trace_csv(rep, path, seed=7)
    header, rows = read_csv(path)
    assert header.startswith("# format=exactpen-trace/1") and "seed=7" in header
    assert tuple(rows[0].keys()) == TRACE_COLUMNS
    assert [int(r["iter"]) for r in rows] == list(range(6))
    assert float(rows[-1]["J0"]) == rep.J0
    assert int(rows[-1]["cum_cg"]) == sum(int(r["cg_iters"]) for r in rows)


def tiny_batch(**kw):
    desc = {"generator": "exp1", "gen_args": {"m_eq": 3, "m_ineq": 3, "n": 8},
            "seeds": [0], "solvers": ["adal"], "thresholds": [0.5]}
    desc.update(kw)
    return desc


def test_batch_single_problem_single_threshold(tmp_path):
    res = run_batch(tiny_batch(), out_dir=tmp_path)
    assert res.ok and len(res.rows) == 1
    header, rows = read_csv(tmp_path / "results.csv")
    assert "seeds=0" in header
    assert tuple(rows[0].keys()) == RESULT_COLUMNS
    _, curve = read_csv(tmp_path / "efficiency.csv")
    assert tuple(curve[0].keys()) == CURVE_COLUMNS
    assert float(curve[-1]["fraction_solved"]) == 1.0


def test_batch_is_deterministic_apart_from_wall_time(tmp_path):
    desc = tiny_batch(seeds=[0, 1], solvers=["irwa-eqineq", "adal"], thresholds=[0.5, 0.9])
    a = run_batch(desc, out_dir=tmp_path / "a")
    b = run_batch(desc, out_dir=tmp_path / "b")
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_s"} for r in rows]
    assert strip(a.rows) == strip(b.rows)
    assert (tmp_path / "a" / "efficiency.csv").read_text() == (tmp_path / "b" / "efficiency.csv").read_text()


def test_batch_records_failures_and_continues():
    # singular H: the gap rule cannot be evaluated, so every solve errors out
    res = run_batch({"generator": "svm", "gen_args": {"m": 5, "s": 2, "t": 2},
                     "seeds": [0, 1], "solvers": ["adal"], "thresholds": [0.5]})
    assert not res.ok and len(res.errors) == 2 and len(res.rows) == 2


# CLI

def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "exactpen", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def test_cli_gen_solve_oracle(tmp_path):
    prob = tmp_path / "p.json"
    assert main(["gen", "exp1", "--seed", "3", "--n", "10", "--m-eq", "3", "--m-ineq", "3", "--out", str(prob)]) == 0
    trace = tmp_path / "trace.csv"
    r = run_cli("solve", prob, "--solver", "adal", "--out", trace)
    assert r.returncode == 0, r.stderr
    summary = json.loads(r.stdout)
    assert summary["status"] == "step" and summary["seed"] == 3
    header, rows = read_csv(trace)
    assert "solver=adal" in header and len(rows) == summary["iterations"] + 1
    out = tmp_path / "oracle.json"
    assert main(["oracle", str(prob), "--out", str(out)]) == 0
    ref = json.loads(out.read_text())
    assert ref["converged"] and summary["J0"] == pytest.approx(ref["J"], rel=1e-4)


def test_cli_flags_iteration_cap(tmp_path):
    prob = tmp_path / "p.json"
    main(["gen", "exp1", "--n", "10", "--m-eq", "3", "--m-ineq", "3", "--out", str(prob)])
    r = run_cli("solve", prob, "--solver", "irwa", "--max-iters", "2")
    assert r.returncode == 1
    assert json.loads(r.stdout)["status"] == "max_iters"


def test_cli_errors_exit_2(tmp_path):
    r = run_cli("solve", tmp_path / "missing.json")
    assert r.returncode == 2 and "error" in r.stderr
    r = run_cli("solve", tmp_path / "missing.json", "--solver", "newton")
    assert r.returncode == 2  # argparse rejects the choice


def test_cli_batch(tmp_path, capsys):
    code = main(["batch", "--count", "2", "--n", "10", "--m-eq", "3", "--m-ineq", "3",
                 "--solvers", "irwa-eqineq,adal", "--thresholds", "50,95", "--out", str(tmp_path)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "adal" in printed and "2/2 solved" in printed
    assert (tmp_path / "results.csv").exists() and (tmp_path / "efficiency.csv").exists()


def test_cli_gen_to_stdout_is_deterministic(capsys):
    main(["gen", "svm", "--seed", "5", "--m", "6", "--s", "2", "--t", "2"])
    first = capsys.readouterr().out
    main(["gen", "svm", "--seed", "5", "--m", "6", "--s", "2", "--t", "2"])
    assert capsys.readouterr().out == first
    assert json.loads(first)["meta"]["seed"] == 5
