"""Batch runs over generated problem families and efficiency curves.

A batch descriptor is a plain dict::

    {"generator": "exp1", "gen_args": {"m_eq": 30, "m_ineq": 30, "n": 100},
     "seeds": [0, 1, ...],
     "solvers": ["irwa", "adal"],
     "params": {...},            # optional overrides of family parameters
     "thresholds": [0.5, 0.75, 0.9, 0.95],
     "cg_rtol": 0.1, "max_iters": 1000}

``run_batch(desc, keep_reports=True)`` also returns every
:class:`~exactpen.report.SolveReport` (with iterates and dual estimates
recorded) for post-hoc checks.

Each solve stops once the largest gap reduction is reached.  The results
file has one row per (problem, solver, threshold); the efficiency file
gives, per solver and threshold, the fraction of problems solved within
each CG budget that occurs in the results.
"""

import csv
import os
import time
from dataclasses import dataclass, field
from typing import List

from ..report import format_float
from .generators import GENERATORS
from .io import problem_from_dict
from .solvers import build_solver, family_params

RESULTS_FORMAT = "exactpen-batch/1"
RESULT_COLUMNS = ("problem", "seed", "solver", "threshold", "cg_steps", "iterations", "status", "wall_s")
CURVE_COLUMNS = ("solver", "threshold", "cg_steps", "fraction_solved")


@dataclass
class BatchResult:
    rows: List[dict]
    curve: List[dict]
    flagged: int = 0
    errors: List[str] = field(default_factory=list)
    reports: List = field(default_factory=list)

    @property
    def ok(self):
        return self.flagged == 0


def _reach(report, fraction):
    """``(cum_cg, iteration, wall_ns)`` at the first row meeting the
    fraction of the reference gap, else ``None``."""
    ref = report.gap_reference
    for row in report.trace:
        if row.gap <= fraction * ref:
            return row.cum_cg, row.iter, row.wall_ns
    return None


def efficiency_curve(rows, solvers, thresholds, n_problems):
    curve = []
    for s in solvers:
        for thr in thresholds:
            hits = sorted(
                r["cg_steps"] for r in rows
                if r["solver"] == s and r["threshold"] == thr and r["cg_steps"] is not None
            )
            for budget in sorted(set(hits)):
                solved = sum(1 for h in hits if h <= budget)
                curve.append({"solver": s, "threshold": thr, "cg_steps": budget,
                              "fraction_solved": solved / n_problems})
    return curve


def run_batch(desc, out_dir=None, keep_reports=False):
    gen = GENERATORS[desc["generator"]]
    gen_args = desc.get("gen_args", {})
    seeds = list(desc["seeds"])
    solvers = list(desc["solvers"])
    thresholds = sorted(float(t) for t in desc.get("thresholds", (0.5, 0.75, 0.9, 0.95)))
    overrides = desc.get("params", {})
    final = 1.0 - thresholds[-1]

    rows, errors, flagged, reports = [], [], 0, []
    for idx, seed in enumerate(seeds):
        doc = gen(seed, **gen_args)
        problem = problem_from_dict(doc)
        for name in solvers:
            params = family_params(doc, name)
            params.update(overrides)
            if "max_iters" in desc:
                params["max_iters"] = desc["max_iters"]
            solve = build_solver(name, params, gap_reduction=final, cg_rtol=desc.get("cg_rtol", 0.1),
                                 record_iterates=keep_reports)
            t0 = time.perf_counter()
            try:
                report = solve(problem)
                status = report.status
            except Exception as exc:  # recorded, the batch continues
                report, status = None, f"error: {type(exc).__name__}: {exc}"
                errors.append(f"problem {idx} seed {seed} {name}: {status}")
            wall = time.perf_counter() - t0
            if keep_reports:
                reports.append(report)
            missed = report is None
            for thr in thresholds:
                hit = _reach(report, 1.0 - thr) if report is not None else None
                missed |= hit is None
                rows.append({
                    "problem": idx, "seed": seed, "solver": name, "threshold": thr,
                    "cg_steps": hit[0] if hit else None,
                    "iterations": hit[1] if hit else None,
                    "status": status,
                    "wall_s": hit[2] * 1e-9 if hit else wall,
                })
            flagged += missed
    curve = efficiency_curve(rows, solvers, thresholds, len(seeds))
    result = BatchResult(rows, curve, flagged, errors, reports)
    if out_dir is not None:
        write_batch(result, out_dir, desc)
    return result


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format_float(v)


def write_batch(result, out_dir, desc):
    os.makedirs(out_dir, exist_ok=True)
    header = (f"# format={RESULTS_FORMAT} generator={desc['generator']} "
              f"seeds={','.join(str(s) for s in desc['seeds'])}\n")
    paths = {}
    for name, cols, data in (("results.csv", RESULT_COLUMNS, result.rows),
                             ("efficiency.csv", CURVE_COLUMNS, result.curve)):
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(header)
            w = csv.writer(fh)
            w.writerow(cols)
            for r in data:
                w.writerow([_cell(r[c]) for c in cols])
        paths[name] = path
    return paths
