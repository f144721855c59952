"""Penalty subproblem instances and their objective evaluations."""

from dataclasses import dataclass

import numpy as np

from . import linop
from .sets import ConvexSet, ProductSet


@dataclass(frozen=True)
class ConvexPiece:
    """One block ``dist_2(A_i x + b_i | C_i)`` of the penalty."""

    A: linop.LinearMap
    b: np.ndarray
    C: ConvexSet

    def __post_init__(self):
        A = linop.aslinearmap(self.A)
        b = np.array(self.b, dtype=float, ndmin=1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if not (A.rows == b.shape[0] == self.C.dim):
            raise ValueError(
                f"piece dimensions disagree: A has {A.rows} rows, b has "
                f"{b.shape[0]} entries, set has dim {self.C.dim}"
            )


class PenaltyProblem:
    """``min_x g.x + 1/2 x.Hx + sum_i dist_2(A_i x + b_i | C_i)`` over R^n.

    The pieces are kept stacked: ``A`` is a single ``m x n`` map, ``b`` a
    length-``m`` vector and ``C`` a :class:`ProductSet` whose offsets
    partition the rows.  ``H`` must be symmetric positive semidefinite; this
    is a precondition, spot-checked by :meth:`validate`.
    """

    def __init__(self, g, H, A, b, sets):
        g = np.array(g, dtype=float, ndmin=1)
        self.n = g.shape[0]
        self.g = g
        self.H = linop.aslinearmap(H)
        if self.H.shape != (self.n, self.n):
            raise ValueError(f"H has shape {self.H.shape}, expected {(self.n, self.n)}")
        self.C = sets if isinstance(sets, ProductSet) else ProductSet(sets)
        self.b = np.array(b, dtype=float, ndmin=1) if self.C.m else np.zeros(0)
        if A is None:
            A = linop.ZeroMap(0, self.n)
        self.A = linop.aslinearmap(A)
        if self.A.rows != self.C.m or self.A.cols != self.n:
            raise ValueError(
                f"A has shape {self.A.shape}, expected {(self.C.m, self.n)}"
            )
        if self.b.shape != (self.C.m,):
            raise ValueError(f"b has length {self.b.shape[0]}, expected {self.C.m}")

    @classmethod
    def from_pieces(cls, g, H, pieces):
        pieces = list(pieces)
        g = np.array(g, dtype=float, ndmin=1)
        if not pieces:
            return cls(g, H, None, np.zeros(0), [])
        for p in pieces:
            if p.A.cols != g.shape[0]:
                raise ValueError(f"piece has {p.A.cols} columns, problem has n={g.shape[0]}")
        A = linop.stack([p.A for p in pieces])
        b = np.concatenate([p.b for p in pieces])
        return cls(g, H, A, b, [p.C for p in pieces])

    @property
    def l(self):
        return len(self.C)

    @property
    def m(self):
        return self.C.m

    @property
    def pieces(self):
        off = self.C.offsets
        return [
            ConvexPiece(linop.rows_of(self.A, off[i], off[i + 1]), self.b[off[i]:off[i + 1]], s)
            for i, s in enumerate(self.C.sets)
        ]

    def _x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected x of length {self.n}, got shape {x.shape}")
        return x

    def affine(self, x):
        """Stacked ``A x + b``."""
        return self.A.apply(self._x(x)) + self.b

    def eval_phi(self, x):
        x = self._x(x)
        return float(self.g @ x + 0.5 * (x @ self.H.apply(x)))

    def distances(self, x):
        return self.C.distances(self.affine(x))

    def eval_J0(self, x):
        return self.eval_phi(x) + float(np.sum(self.distances(x)))

    def eval_J(self, x, eps):
        """The epsilon-smoothing ``phi + sum_i sqrt(dist_i^2 + eps_i^2)``.

        ``eps = 0`` is accepted here and gives :meth:`eval_J0`.
        """
        d = self.distances(x)
        eps = self._eps(eps, allow_zero=True)
        return self.eval_phi(x) + float(np.sum(np.hypot(d, eps)))

    def weights(self, x, eps):
        eps = self._eps(eps)
        return 1.0 / np.hypot(self.distances(x), eps)

    def residuals(self, x):
        """Per-piece ``(I - P_{C_i})(A_i x + b_i)`` as a list of arrays."""
        return self.C.segments(self.C.residual(self.affine(x)))

    def _eps(self, eps, allow_zero=False):
        eps = np.broadcast_to(np.asarray(eps, dtype=float), (self.l,))
        if allow_zero:
            if np.any(eps < 0):
                raise ValueError("relaxation vector must be nonnegative")
        elif np.any(eps <= 0):
            raise ValueError("relaxation vector must be strictly positive")
        return eps

    def validate(self, rng=None, trials=5, tol=1e-10):
        """Randomized spot checks that ``H`` is symmetric and PSD.

        Raises ``ValueError`` on a violation.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(trials):
            x = rng.standard_normal(self.n)
            y = rng.standard_normal(self.n)
            Hx, Hy = self.H.apply(x), self.H.apply(y)
            scale = max(1.0, np.linalg.norm(Hx) * np.linalg.norm(y))
            if abs(Hx @ y - x @ Hy) > tol * scale:
                raise ValueError("H fails the symmetry check")
            if x @ Hx < -tol * max(1.0, np.linalg.norm(Hx) * np.linalg.norm(x)):
                raise ValueError("H fails the positive semidefinite check")
        return self

    def __repr__(self):
        return f"<PenaltyProblem n={self.n} l={self.l} m={self.m}>"
