"""Seeded random instances for the three benchmark families.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``.  Gamma
variates use numpy's ``standard_gamma`` (Marsaglia-Tsang squeeze rejection,
with the ``U^(1/a)`` boost for shape ``a < 1``); inverse-gamma draws are
``scale / Gamma(shape, 1)``.  "Mean and variance" recipes feed the
variance (not the standard deviation) to the normal sampler, and integer
ranges include both endpoints.

Each generator returns a problem document (see :mod:`exactpen.bench.io`)
whose ``meta`` records the generator, seed, sizes and the solver
parameters used for that family.
"""

import math

import numpy as np

from .io import PROBLEM_FORMAT, _encode

RNG_NAME = "numpy.PCG64"


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _randint(rng, lo, hi):
    """Uniform integer on ``[lo, hi]`` inclusive."""
    return int(rng.integers(lo, hi, endpoint=True))


def _normal_block(rng, shape, mean_range, var_range):
    mean = _randint(rng, *mean_range)
    var = _randint(rng, *var_range)
    return rng.normal(mean, math.sqrt(var), size=shape)


def inverse_gamma(rng, shape, scale, size):
    return scale / rng.standard_gamma(shape, size=size)


def _row_pieces(A, b, kinds):
    return [
        {"rows": 1, "set": {"type": k, "dim": 1}, "A": {"type": "dense", "data": [A[i]]}, "b": [b[i]]}
        for i, k in enumerate(kinds)
    ]


def _doc(n, g, H, pieces, meta):
    return _encode({"format": PROBLEM_FORMAT, "n": n, "g": g, "H": H, "pieces": pieces, "meta": meta})


def gen_experiment1(seed, m_eq=300, m_ineq=300, n=1000):
    """Random equality/inequality instance with ``H = 0.1 I + L L^T``."""
    if min(m_eq, m_ineq) < 0 or n <= 0 or m_eq + m_ineq == 0:
        raise ValueError("experiment 1 needs positive dimensions")
    rng = make_rng(seed)
    m = m_eq + m_ineq
    A = _normal_block(rng, (m, n), (1, 10), (1, 10))
    b = _normal_block(rng, m, (-100, 100), (1, 100))
    g = _normal_block(rng, n, (-100, 100), (1, 100))
    L = rng.normal(1.0, math.sqrt(2.0), size=(n, n))
    H = {"type": "low_rank_plus_diag", "diag": np.full(n, 0.1), "factor": L, "inner": np.ones(n)}
    meta = {
        "generator": "exp1", "seed": seed, "rng": RNG_NAME,
        "m_eq": m_eq, "m_ineq": m_ineq, "n": n,
        "params": {"eta": 0.6, "M": 1e4, "gamma": 1 / 6, "mu": 100.0, "eps0": 2000.0},
    }
    return _doc(n, g, H, _row_pieces(A, b, ["zero"] * m_eq + ["nonpos"] * m_ineq), meta)


def experiment2_sizes(j):
    n = 200 + 500 * (j - 1)
    m = n // 2
    return n, m


def gen_experiment2(seed, j):
    """Instance ``j`` of the growing-dimension family with
    ``H = 40 I + L D L^T`` (``L`` of rank 8, ``D`` inverse-gamma)."""
    if j < 1:
        raise ValueError(f"experiment 2 index starts at 1, got {j}")
    rng = make_rng(seed)
    n, m = experiment2_sizes(j)
    m_eq = m // 2
    A = _normal_block(rng, (m, n), (1, 10), (1, 10))
    b = _normal_block(rng, m, (-200, 200), (1, 200))
    g = _normal_block(rng, n, (-200, 200), (1, 200))
    L = _normal_block(rng, (n, 8), (1, 10), (1, 10))
    D = inverse_gamma(rng, 0.5, 1.0, 8)
    H = {"type": "low_rank_plus_diag", "diag": np.full(n, 40.0), "factor": L, "inner": D}
    meta = {
        "generator": "exp2", "seed": seed, "rng": RNG_NAME, "j": j, "n": n, "m": m,
        "params": {
            "eta": 0.5, "M": 1e4, "gamma": 1 / 6,
            "eps0": 10.0 ** (2 + 1.3 * math.log(j + 10)), "mu": 500.0 * (1 + j),
        },
    }
    return _doc(n, g, H, _row_pieces(A, b, ["zero"] * m_eq + ["nonpos"] * (m - m_eq)), meta)


def l1svm_sizes(j):
    return 200 + 10 * j, 19 + 2 * j, 200 + 30 * j


def gen_l1svm(seed, j=0, lam=50.0, m=None, s=None, t=None):
    """l1-regularized hinge-loss classification as a penalty problem.

    Features are ``[T, R]`` with ``T`` (``m x s``) informative and ``R``
    (``m x t``) pure noise; labels are ``sign(T beta_hat)``.  Hinge terms
    become ``dist(1 - y_i x_i.beta | R_-)`` and the l1 term becomes
    ``dist(lam beta_j | {0})``; ``H = 0`` and ``g = 0``.  ``m``, ``s``
    and ``t`` override the sizes of family member ``j``.
    """
    if j < 0:
        raise ValueError(f"svm index must be nonnegative, got {j}")
    m0, s0, t0 = l1svm_sizes(j)
    m = m0 if m is None else m
    s = s0 if s is None else s
    t = t0 if t is None else t
    rng = make_rng(seed)
    mean = _randint(rng, 1, 5)
    std = _randint(rng, 6, 10)
    T = rng.normal(mean, std, size=(m, s))
    beta_hat = rng.integers(-100, 100, size=s, endpoint=True)
    y = np.sign(T @ beta_hat)
    y[y == 0] = 1.0
    R = rng.standard_normal((m, t))
    X = np.hstack([T, R])
    n = s + t
    hinge = [
        {"rows": 1, "set": {"type": "nonpos", "dim": 1},
         "A": {"type": "dense", "data": [-y[i] * X[i]]}, "b": [1.0]}
        for i in range(m)
    ]
    l1 = [
        {"rows": 1, "set": {"type": "zero", "dim": 1},
         "A": {"type": "sparse", "i": [0], "j": [k], "v": [float(lam)]}, "b": [0.0]}
        for k in range(n)
    ]
    meta = {
        "generator": "svm", "seed": seed, "rng": RNG_NAME, "j": j,
        "m": m, "s": s, "t": t, "lam": float(lam),
        "X": X, "y": y, "beta_hat": beta_hat,
        "params": {
            "eps0": 1e4, "eta": 0.7, "M": 1e4, "gamma": 1 / 6,
            "sigma": 1e-4, "sigma_prime": 1e-8,
            "mu": 1.0, "sigma_dprime": 0.05, "adal_sigma": 0.05, "adal_max_iters": 150,
        },
    }
    return _doc(n, np.zeros(n), {"type": "zero"}, hinge + l1, meta)


def svm_objective(X, y, lam, beta):
    """Hinge loss plus ``lam ||beta||_1``, evaluated directly."""
    return float(np.sum(np.maximum(1.0 - y * (X @ beta), 0.0)) + lam * np.sum(np.abs(beta)))


GENERATORS = {"exp1": gen_experiment1, "exp2": gen_experiment2, "svm": gen_l1svm}
