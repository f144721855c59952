"""Matrix-free linear operators.

A :class:`LinearMap` only knows how to apply itself and its transpose to a
vector.  Solvers never form matrix products; composite operators such as
``H + A^T W A`` are built lazily from the pieces.

>>> import numpy as np
>>> m = stack([identity(2), scaled(2.0, identity(2))])
>>> m.apply(np.ones(2))
array([1., 1., 2., 2.])
"""

import numpy as np

from . import _kernels


def _as_vector(v, size, what):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != size:
        raise ValueError(
            f"{what}: expected a vector of length {size}, got shape {v.shape}"
        )
    return v


class LinearMap:
    """Abstract ``rows x cols`` linear operator.

    Subclasses implement ``_apply`` and ``_apply_transpose``; the public
    methods validate dimensions.  Instances are immutable after
    construction.
    """

    kind = "abstract"

    def __init__(self, rows, cols):
        self.rows = int(rows)
        self.cols = int(cols)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def apply(self, x):
        x = _as_vector(x, self.cols, f"apply on {self.rows}x{self.cols} {self.kind} map")
        return self._apply(x)

    def apply_transpose(self, y):
        y = _as_vector(
            y, self.rows, f"apply_transpose on {self.rows}x{self.cols} {self.kind} map"
        )
        return self._apply_transpose(y)

    def _apply(self, x):
        raise NotImplementedError

    def _apply_transpose(self, y):
        raise NotImplementedError

    def __matmul__(self, x):
        return self.apply(x)

    def to_dense(self):
        """Materialize the operator column by column.  Intended for tests
        and small oracles only."""
        out = np.empty((self.rows, self.cols))
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            out[:, j] = self._apply(e)
            e[j] = 0.0
        return out

    def __repr__(self):
        return f"<{type(self).__name__} {self.rows}x{self.cols}>"


class DenseMap(LinearMap):
    kind = "dense"

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=float, ndmin=2)
        if matrix.ndim != 2:
            raise ValueError(f"dense map needs a 2-D array, got ndim={matrix.ndim}")
        super().__init__(*matrix.shape)
        matrix.setflags(write=False)
        self.matrix = matrix

    def _apply(self, x):
        return self.matrix @ x

    def _apply_transpose(self, y):
        return self.matrix.T @ y

    def to_dense(self):
        return self.matrix.copy()


class DiagonalMap(LinearMap):
    kind = "diagonal"

    def __init__(self, diag):
        diag = np.array(diag, dtype=float, ndmin=1)
        super().__init__(diag.shape[0], diag.shape[0])
        diag.setflags(write=False)
        self.diag = diag

    def _apply(self, x):
        return self.diag * x

    _apply_transpose = _apply


class ZeroMap(LinearMap):
    kind = "zero"

    def _apply(self, x):
        return np.zeros(self.rows)

    def _apply_transpose(self, y):
        return np.zeros(self.cols)


class SparseTripletMap(LinearMap):
    """Coordinate-format sparse matrix.  Duplicate entries are summed."""

    kind = "sparse"

    def __init__(self, rows, cols, i, j, v):
        super().__init__(rows, cols)
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        v = np.asarray(v, dtype=float)
        if not (i.shape == j.shape == v.shape) or i.ndim != 1:
            raise ValueError("triplet arrays must be 1-D and of equal length")
        if i.size and (i.min() < 0 or i.max() >= self.rows):
            raise ValueError(f"row index out of range for {self.rows} rows")
        if j.size and (j.min() < 0 or j.max() >= self.cols):
            raise ValueError(f"column index out of range for {self.cols} cols")
        for a in (i, j, v):
            a.setflags(write=False)
        self.i, self.j, self.v = i, j, v

    def _apply(self, x):
        return _kernels.coo_matvec(self.i, self.j, self.v, x, self.rows)

    def _apply_transpose(self, y):
        return _kernels.coo_rmatvec(self.i, self.j, self.v, y, self.cols)


class LowRankPlusDiagMap(LinearMap):
    """``diag(d) + L diag(c) L^T`` with ``L`` of shape ``n x k``.

    ``c`` defaults to ones, giving ``diag(d) + L L^T``.
    """

    kind = "low_rank_plus_diag"

    def __init__(self, diag, factor, inner=None):
        diag = np.array(diag, dtype=float, ndmin=1)
        factor = np.array(factor, dtype=float, ndmin=2)
        n = diag.shape[0]
        if factor.shape[0] != n:
            raise ValueError(f"factor has {factor.shape[0]} rows, diagonal has {n}")
        if inner is None:
            inner = np.ones(factor.shape[1])
        inner = np.array(inner, dtype=float, ndmin=1)
        if inner.shape[0] != factor.shape[1]:
            raise ValueError(
                f"inner diagonal has length {inner.shape[0]}, factor rank is {factor.shape[1]}"
            )
        super().__init__(n, n)
        for a in (diag, factor, inner):
            a.setflags(write=False)
        self.diag, self.factor, self.inner = diag, factor, inner

    def _apply(self, x):
        return self.diag * x + self.factor @ (self.inner * (self.factor.T @ x))

    _apply_transpose = _apply


class ScaledMap(LinearMap):
    kind = "scaled"

    def __init__(self, alpha, inner):
        super().__init__(inner.rows, inner.cols)
        self.alpha = float(alpha)
        self.inner = inner

    def _apply(self, x):
        return self.alpha * self.inner._apply(x)

    def _apply_transpose(self, y):
        return self.alpha * self.inner._apply_transpose(y)


class StackedMap(LinearMap):
    """Vertical concatenation ``[B_1; B_2; ...]`` of maps sharing ``cols``."""

    kind = "stack"

    def __init__(self, blocks):
        blocks = tuple(blocks)
        if not blocks:
            raise ValueError("stack needs at least one block")
        cols = blocks[0].cols
        for b in blocks:
            if b.cols != cols:
                raise ValueError(
                    f"stacked blocks disagree on column count: {b.cols} != {cols}"
                )
        offsets = np.cumsum([0] + [b.rows for b in blocks])
        super().__init__(int(offsets[-1]), cols)
        self.blocks = blocks
        self.offsets = offsets

    def _apply(self, x):
        return np.concatenate([b._apply(x) for b in self.blocks])

    def _apply_transpose(self, y):
        out = np.zeros(self.cols)
        for b, lo, hi in zip(self.blocks, self.offsets[:-1], self.offsets[1:]):
            out += b._apply_transpose(y[lo:hi])
        return out


class RowSliceMap(LinearMap):
    """Rows ``start:stop`` of another map."""

    kind = "row_slice"

    def __init__(self, inner, start, stop):
        if not 0 <= start <= stop <= inner.rows:
            raise ValueError(f"bad row slice {start}:{stop} of {inner.rows} rows")
        super().__init__(stop - start, inner.cols)
        self.inner, self.start, self.stop = inner, int(start), int(stop)

    def _apply(self, x):
        return self.inner._apply(x)[self.start:self.stop]

    def _apply_transpose(self, y):
        full = np.zeros(self.inner.rows)
        full[self.start:self.stop] = y
        return self.inner._apply_transpose(full)


class SumMap(LinearMap):
    kind = "sum"

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ValueError("sum needs at least one term")
        shape = terms[0].shape
        for t in terms:
            if t.shape != shape:
                raise ValueError(f"summed maps disagree in shape: {t.shape} != {shape}")
        super().__init__(*shape)
        self.terms = terms

    def _apply(self, x):
        out = self.terms[0]._apply(x)
        for t in self.terms[1:]:
            out = out + t._apply(x)
        return out

    def _apply_transpose(self, y):
        out = self.terms[0]._apply_transpose(y)
        for t in self.terms[1:]:
            out = out + t._apply_transpose(y)
        return out


class NormalMap(LinearMap):
    """Lazy ``m^T diag(weights) m``; the product matrix is never formed."""

    kind = "normal"

    def __init__(self, inner, weights):
        weights = _as_vector(weights, inner.rows, "normal_map weights")
        if not np.all(np.isfinite(weights)):
            raise ValueError("normal_map weights must be finite")
        if np.any(weights < 0):
            raise ValueError("normal_map weights must be nonnegative")
        super().__init__(inner.cols, inner.cols)
        self.inner = inner
        self.weights = weights

    def _apply(self, x):
        return self.inner._apply_transpose(self.weights * self.inner._apply(x))

    _apply_transpose = _apply


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def identity(n):
    return DiagonalMap(np.ones(n))


def diagonal(*entries):
    if len(entries) == 1 and np.ndim(entries[0]) == 1:
        entries = entries[0]
    return DiagonalMap(entries)


def dense(matrix):
    return DenseMap(matrix)


def scaled(alpha, m):
    return ScaledMap(alpha, m)


def _merge_run(run):
    if isinstance(run[0], DenseMap):
        return DenseMap(np.vstack([b.matrix for b in run]))
    offsets = np.cumsum([0] + [b.rows for b in run])
    return SparseTripletMap(
        int(offsets[-1]), run[0].cols,
        np.concatenate([b.i + o for b, o in zip(run, offsets)]),
        np.concatenate([b.j for b in run]),
        np.concatenate([b.v for b in run]),
    )


def stack(blocks):
    """Stack maps vertically.  Consecutive dense blocks, and consecutive
    sparse blocks, are merged into single kernels so that many one-row
    pieces still apply with one BLAS call or one loop per run."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("stack needs at least one block")
    cols = {b.cols for b in blocks}
    if len(cols) != 1:
        raise ValueError(f"stacked blocks disagree on column count: {sorted(cols)}")
    merged, run = [], []
    for b in blocks:
        if run and type(b) is type(run[0]) and isinstance(b, (DenseMap, SparseTripletMap)):
            run.append(b)
            continue
        if run:
            merged.append(_merge_run(run) if len(run) > 1 else run[0])
        run = [b] if isinstance(b, (DenseMap, SparseTripletMap)) else []
        if not run:
            merged.append(b)
    if run:
        merged.append(_merge_run(run) if len(run) > 1 else run[0])
    return merged[0] if len(merged) == 1 else StackedMap(merged)


def normal_map(m, weights):
    """``x -> m^T diag(weights) m x`` as a lazy symmetric PSD operator."""
    return NormalMap(m, weights)


def add(*terms):
    terms = [t for t in terms if not isinstance(t, ZeroMap)] or list(terms[:1])
    return terms[0] if len(terms) == 1 else SumMap(terms)


def rows_of(m, start, stop):
    """Rows ``start:stop`` of ``m``, sliced directly when the kernel allows."""
    if isinstance(m, DenseMap):
        return DenseMap(m.matrix[start:stop])
    if isinstance(m, SparseTripletMap):
        keep = (m.i >= start) & (m.i < stop)
        return SparseTripletMap(stop - start, m.cols, m.i[keep] - start, m.j[keep], m.v[keep])
    if isinstance(m, StackedMap):
        for b, lo, hi in zip(m.blocks, m.offsets[:-1], m.offsets[1:]):
            if lo == start and hi == stop:
                return b
    return RowSliceMap(m, start, stop)


def aslinearmap(obj):
    """Wrap arrays as dense maps; pass LinearMaps through."""
    if isinstance(obj, LinearMap):
        return obj
    return DenseMap(obj)
