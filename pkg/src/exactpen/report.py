"""Per-iteration trace rows, solve reports and their CSV form."""

import csv
import math
from dataclasses import dataclass, field, fields
from typing import List, Optional

import numpy as np

TRACE_FORMAT = "exactpen-trace/1"

NAN = float("nan")


@dataclass
class TraceRow:
    """One row per iterate ``x^k``.

    ``J_model`` is ``J(x^k, eps^k)`` for IRWA and ``Jhat(x^k, p^k)`` for
    ADAL.  ``cg_iters`` counts the CG steps spent producing ``x^k`` and
    ``cum_cg`` their running total.  Columns that do not apply to a solver
    hold NaN.
    """

    iter: int
    J0: float
    J_model: float
    dual_obj: float
    gap: float
    cg_iters: int
    cum_cg: int
    step_norm: float
    eps_norm: float = NAN
    z_norm: float = NAN
    q_norm: float = NAN
    E_k: float = NAN
    wall_ns: int = 0


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow))


@dataclass
class SolveReport:
    solver: str
    status: str  # "step", "gap", or "max_iters"
    x: np.ndarray
    trace: List[TraceRow]
    iterations: int
    cumulative_cg: int
    cg_unconverged: int = 0
    gap_reference: float = NAN
    iterates: Optional[list] = None
    duals: Optional[list] = None
    extra: dict = field(default_factory=dict)

    @property
    def converged(self):
        return self.status != "max_iters"

    @property
    def flagged(self):
        return not self.converged

    @property
    def J0(self):
        return self.trace[-1].J0

    @property
    def dual_obj(self):
        return self.trace[-1].dual_obj

    @property
    def gap(self):
        return self.trace[-1].gap

    def cg_to_reach(self, fraction):
        """Cumulative CG steps at the first iterate whose gap is at most
        ``fraction`` of the reference gap, or ``None`` if never reached."""
        ref = self.gap_reference
        if not math.isfinite(ref):
            return None
        for row in self.trace:
            if row.gap <= fraction * ref:
                return row.cum_cg
        return None


def format_float(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def write_trace_csv(report, path_or_file, seed=None):
    """Write the trace with a one-line ``#`` header naming format, solver
    and seed; read back with e.g. ``pandas.read_csv(path, comment="#")``."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        fh.write(f"# format={TRACE_FORMAT} solver={report.solver} seed={seed} status={report.status}\n")
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in report.trace:
            w.writerow([format_float(getattr(row, c)) for c in TRACE_COLUMNS])
    finally:
        if own:
            fh.close()
