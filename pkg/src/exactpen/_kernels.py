"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin.  The numba path is used unless the
environment variable ``EXACTPEN_DISABLE_NUMBA`` is set to a truthy value
or numba cannot be imported.  Both paths must agree to rounding; the test
suite runs them against each other.
"""

import os

import numpy as np

_FALSY = ("", "0", "false", "no", "off")


def _numba_requested():
    return os.environ.get("EXACTPEN_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    if not _numba_requested():
        raise ImportError("numba disabled by EXACTPEN_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------

def coo_matvec_numpy(rows, cols, vals, x, nrows):
    out = np.zeros(nrows)
    np.add.at(out, rows, vals * x[cols])
    return out


def coo_rmatvec_numpy(rows, cols, vals, y, ncols):
    out = np.zeros(ncols)
    np.add.at(out, cols, vals * y[rows])
    return out


def segment_norms_numpy(v, offsets):
    sq = v * v
    l = offsets.shape[0] - 1
    if l == 0:
        return np.zeros(0)
    sizes = np.diff(offsets)
    if np.all(sizes == 1):
        return np.abs(v)
    # reduceat misbehaves on empty segments; pieces always have >= 1 row
    return np.sqrt(np.add.reduceat(sq, offsets[:-1]))


def segment_dots_numpy(a, b, offsets):
    l = offsets.shape[0] - 1
    if l == 0:
        return np.zeros(0)
    return np.add.reduceat(a * b, offsets[:-1])


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def coo_matvec_numba(rows, cols, vals, x, nrows):
        out = np.zeros(nrows)
        for k in range(vals.shape[0]):
            out[rows[k]] += vals[k] * x[cols[k]]
        return out

    @njit(cache=True)
    def coo_rmatvec_numba(rows, cols, vals, y, ncols):
        out = np.zeros(ncols)
        for k in range(vals.shape[0]):
            out[cols[k]] += vals[k] * y[rows[k]]
        return out

    @njit(cache=True)
    def segment_norms_numba(v, offsets):
        l = offsets.shape[0] - 1
        out = np.empty(l)
        for i in range(l):
            s = 0.0
            for j in range(offsets[i], offsets[i + 1]):
                s += v[j] * v[j]
            out[i] = np.sqrt(s)
        return out

    @njit(cache=True)
    def segment_dots_numba(a, b, offsets):
        l = offsets.shape[0] - 1
        out = np.empty(l)
        for i in range(l):
            s = 0.0
            for j in range(offsets[i], offsets[i + 1]):
                s += a[j] * b[j]
            out[i] = s
        return out

    coo_matvec = coo_matvec_numba
    coo_rmatvec = coo_rmatvec_numba
    segment_norms = segment_norms_numba
    segment_dots = segment_dots_numba
else:
    coo_matvec = coo_matvec_numpy
    coo_rmatvec = coo_rmatvec_numpy
    segment_norms = segment_norms_numpy
    segment_dots = segment_dots_numpy


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if HAVE_NUMBA else "numpy"
