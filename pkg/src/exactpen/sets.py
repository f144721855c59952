"""Closed convex sets with projection, distance and support function.

Single sets (:class:`ZeroPoint`, :class:`NonPosOrthant`, :class:`Box`,
:class:`Ball2`, :class:`Point`) implement the per-piece operations.  A
:class:`ProductSet` holds the whole catalog ``C_1 x ... x C_l`` and
evaluates the same operations on stacked vectors without a Python loop
over pieces.
"""

import numpy as np

from . import _kernels


def _check(y, dim):
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        y = y.reshape(1)
    if y.ndim != 1 or y.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got shape {y.shape}")
    return y


def _box_support(u, lo, hi):
    # inf * 0 is taken as 0: only coordinates with the matching sign contribute
    with np.errstate(invalid="ignore"):
        up = np.where(u > 0, hi * u, 0.0)
        down = np.where(u < 0, lo * u, 0.0)
    return up + down


class ConvexSet:
    """Nonempty closed convex subset of R^dim."""

    type_name = "abstract"

    def __init__(self, dim):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("set dimension must be positive")

    def project(self, y):
        return self._project(_check(y, self.dim))

    def distance2(self, y):
        y = _check(y, self.dim)
        return float(np.linalg.norm(y - self._project(y)))

    def support(self, u):
        return self._support(_check(u, self.dim))

    def subgradient_of_distance(self, y):
        """Unit vector ``(y - P(y)) / dist`` off the set, zero on it."""
        y = _check(y, self.dim)
        r = y - self._project(y)
        d = np.linalg.norm(r)
        if d == 0.0:
            return np.zeros(self.dim)
        return r / d

    def contains(self, y, tol=0.0):
        return self.distance2(y) <= tol

    def box_bounds(self):
        """Per-coordinate ``(lo, hi)`` when the set is a box, else ``None``."""
        return None

    def to_dict(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class _BoxLike(ConvexSet):
    def _project(self, y):
        lo, hi = self.box_bounds()
        return np.clip(y, lo, hi)

    def _support(self, u):
        lo, hi = self.box_bounds()
        return float(np.sum(_box_support(u, lo, hi)))


class ZeroPoint(_BoxLike):
    type_name = "zero"

    def box_bounds(self):
        z = np.zeros(self.dim)
        return z, z

    def _support(self, u):
        return 0.0

    def to_dict(self):
        return {"type": "zero", "dim": self.dim}


class NonPosOrthant(_BoxLike):
    type_name = "nonpos"

    def box_bounds(self):
        return np.full(self.dim, -np.inf), np.zeros(self.dim)

    def _support(self, u):
        return 0.0 if np.all(u >= 0) else np.inf

    def to_dict(self):
        return {"type": "nonpos", "dim": self.dim}


class Box(_BoxLike):
    """``{y : lo <= y <= hi}``; bounds may be infinite."""

    type_name = "box"

    def __init__(self, lo, hi):
        lo = np.array(lo, dtype=float, ndmin=1)
        hi = np.array(hi, dtype=float, ndmin=1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-D and of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")
        if np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("box would be empty")
        super().__init__(lo.shape[0])
        self.lo, self.hi = lo, hi

    def box_bounds(self):
        return self.lo, self.hi

    def to_dict(self):
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Point(_BoxLike):
    type_name = "point"

    def __init__(self, c):
        c = np.array(c, dtype=float, ndmin=1)
        if not np.all(np.isfinite(c)):
            raise ValueError("point must be finite")
        super().__init__(c.shape[0])
        self.c = c

    def box_bounds(self):
        return self.c, self.c

    def _support(self, u):
        return float(u @ self.c)

    def to_dict(self):
        return {"type": "point", "c": self.c.tolist()}


class Ball2(ConvexSet):
    type_name = "ball"

    def __init__(self, center, radius):
        center = np.array(center, dtype=float, ndmin=1)
        radius = float(radius)
        if not radius >= 0:
            raise ValueError("ball radius must be nonnegative")
        super().__init__(center.shape[0])
        self.center, self.radius = center, radius

    def _project(self, y):
        d = y - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return y.copy()
        return self.center + (self.radius / nd) * d

    def _support(self, u):
        return float(u @ self.center + self.radius * np.linalg.norm(u))

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


_SET_TYPES = {
    "zero": lambda d: ZeroPoint(d["dim"]),
    "nonpos": lambda d: NonPosOrthant(d["dim"]),
    "box": lambda d: Box(d["lo"], d["hi"]),
    "point": lambda d: Point(d["c"]),
    "ball": lambda d: Ball2(d["center"], d["radius"]),
}


def set_from_dict(d):
    try:
        make = _SET_TYPES[d["type"]]
    except KeyError:
        raise ValueError(f"unknown set type {d.get('type')!r}") from None
    return make(d)


class ProductSet:
    """``C_1 x ... x C_l`` acting on stacked vectors.

    Box-like pieces (zero, nonpos, box, point) are handled with one clip over
    all rows; balls are fixed up piece by piece afterwards.
    """

    def __init__(self, sets):
        self.sets = tuple(sets)
        dims = np.array([s.dim for s in self.sets], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(dims)]).astype(np.int64)
        self.dims = dims
        self.m = int(self.offsets[-1])
        lo = np.full(self.m, -np.inf)
        hi = np.full(self.m, np.inf)
        balls = []
        for i, s in enumerate(self.sets):
            a, b = self.offsets[i], self.offsets[i + 1]
            bounds = s.box_bounds()
            if bounds is None:
                balls.append((i, a, b, s))
            else:
                lo[a:b], hi[a:b] = bounds
        self.lo, self.hi = lo, hi
        self._balls = tuple(balls)
        self.kinds = tuple(s.type_name for s in self.sets)

    def __len__(self):
        return len(self.sets)

    def segments(self, v):
        return [v[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def expand(self, per_piece):
        """Repeat one value per piece across that piece's rows."""
        return np.repeat(per_piece, self.dims)

    def block_norms(self, v):
        return _kernels.segment_norms(v, self.offsets)

    def block_dots(self, a, b):
        return _kernels.segment_dots(a, b, self.offsets)

    def project(self, y):
        p = np.clip(y, self.lo, self.hi)
        for _, a, b, s in self._balls:
            p[a:b] = s._project(y[a:b])
        return p

    def residual(self, y):
        """``(I - P_C) y`` on the stacked vector."""
        return y - self.project(y)

    def distances(self, y):
        return self.block_norms(self.residual(y))

    def support(self, u):
        """Per-piece support values; entries may be ``+inf``."""
        vals = self.block_dots(np.ones_like(u), _box_support(u, self.lo, self.hi))
        for i, a, b, s in self._balls:
            vals[i] = s._support(u[a:b])
        return vals

    def subgradient_of_distance(self, y):
        r = self.residual(y)
        d = self.block_norms(r)
        scale = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
        return r * self.expand(scale)

    def is_dual_feasible(self, u, tol=1e-10):
        return bool(
            np.all(self.block_norms(u) <= 1.0 + tol)
            and np.all(np.isfinite(self.support(u)))
        )
