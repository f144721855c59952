import numpy as np
import pytest
from hypothesis import settings

from exactpen import linop
from exactpen.problem import PenaltyProblem
from exactpen.sets import NonPosOrthant, ZeroPoint

settings.register_profile("repo", deadline=None, max_examples=100, derandomize=True)
settings.load_profile("repo")


def random_eqineq(seed, n=6, m_eq=3, m_ineq=3, h_shift=0.5):
    """Small random instance with 1-D equality and inequality rows."""
    rng = np.random.default_rng(seed)
    m = m_eq + m_ineq
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    L = rng.standard_normal((n, n))
    H = L @ L.T / n + h_shift * np.eye(n)
    sets = [ZeroPoint(1)] * m_eq + [NonPosOrthant(1)] * m_ineq
    return PenaltyProblem(rng.standard_normal(n), linop.dense(H), linop.dense(A), b, sets)


def one_var_equality():
    """min x^2/2 + |x - 1|, minimized at x = 1 with value 1/2."""
    return PenaltyProblem([0.0], linop.identity(1), linop.dense([[1.0]]), [-1.0], [ZeroPoint(1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
