"""JSON problem files.

Schema (``format: exactpen-problem/1``)::

    {"format": ..., "n": int, "g": [...],
     "H": {"type": "dense", "data": [[...]]}
        | {"type": "diag", "data": [...]}
        | {"type": "low_rank_plus_diag", "diag": [...], "factor": [[...]], "inner": [...]}
        | {"type": "zero"},
     "pieces": [{"rows": int, "set": {"type": ..., ...},
                 "A": {"type": "dense", "data": [[...]]}
                    | {"type": "sparse", "i": [...], "j": [...], "v": [...]},
                 "b": [...]}],
     "meta": {...}}

Infinite entries are written as the strings ``"inf"`` and ``"-inf"``.
Python's float repr round-trips exactly, so write-then-read is
bit-identical for finite values.
"""

import json
import math

import numpy as np

from .. import linop
from ..problem import ConvexPiece, PenaltyProblem
from ..sets import set_from_dict

PROBLEM_FORMAT = "exactpen-problem/1"


def _encode(obj):
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            raise ValueError("NaN cannot be stored in a problem file")
        return v
    return obj


def _floats(seq):
    return np.array([float(v) for v in seq], dtype=float) if len(seq) else np.zeros(0)


def _matrix(rows, ncols):
    if not rows:
        return np.zeros((0, ncols))
    return np.array([[float(v) for v in r] for r in rows], dtype=float)


def _set(d):
    d = dict(d)
    for key in ("lo", "hi", "c", "center"):
        if key in d:
            d[key] = _floats(d[key])
    return set_from_dict(d)


def _linear_map(d, rows, cols):
    kind = d["type"]
    if kind == "dense":
        return linop.DenseMap(_matrix(d["data"], cols).reshape(rows, cols))
    if kind == "sparse":
        return linop.SparseTripletMap(rows, cols, d["i"], d["j"], _floats(d["v"]))
    if kind == "diag":
        return linop.DiagonalMap(_floats(d["data"]))
    if kind == "low_rank_plus_diag":
        factor = _matrix(d["factor"], 0)
        inner = _floats(d["inner"]) if "inner" in d else None
        return linop.LowRankPlusDiagMap(_floats(d["diag"]), factor, inner)
    if kind == "zero":
        return linop.ZeroMap(rows, cols)
    raise ValueError(f"unknown operator type {kind!r}")


def problem_from_dict(doc):
    """Build a :class:`PenaltyProblem` from a parsed problem document."""
    fmt = doc.get("format", PROBLEM_FORMAT)
    if fmt != PROBLEM_FORMAT:
        raise ValueError(f"unsupported problem format {fmt!r}")
    n = int(doc["n"])
    g = _floats(doc["g"])
    H = _linear_map(doc["H"], n, n)
    pieces = []
    for k, pd in enumerate(doc["pieces"]):
        rows = int(pd["rows"])
        try:
            pieces.append(ConvexPiece(_linear_map(pd["A"], rows, n), _floats(pd["b"]), _set(pd["set"])))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"piece {k}: {exc}") from exc
    return PenaltyProblem.from_pieces(g, H, pieces)


def _map_to_dict(m):
    if isinstance(m, linop.ZeroMap):
        return {"type": "zero"}
    if isinstance(m, linop.DiagonalMap):
        return {"type": "diag", "data": m.diag}
    if isinstance(m, linop.LowRankPlusDiagMap):
        return {"type": "low_rank_plus_diag", "diag": m.diag, "factor": m.factor, "inner": m.inner}
    if isinstance(m, linop.SparseTripletMap):
        return {"type": "sparse", "i": m.i, "j": m.j, "v": m.v}
    return {"type": "dense", "data": m.to_dense()}


def problem_to_dict(problem, meta=None):
    """Document for an in-memory problem; piece blocks are written densely."""
    pieces = []
    for pc in problem.pieces:
        a = {"type": "dense", "data": pc.A.to_dense()}
        pieces.append({"rows": pc.A.rows, "set": pc.C.to_dict(), "A": a, "b": pc.b})
    doc = {
        "format": PROBLEM_FORMAT,
        "n": problem.n,
        "g": problem.g,
        "H": _map_to_dict(problem.H),
        "pieces": pieces,
    }
    if meta is not None:
        doc["meta"] = meta
    return _encode(doc)


def dumps(doc):
    return json.dumps(_encode(doc), separators=(",", ":"))


def write_problem(doc, path):
    """Write a document (or a :class:`PenaltyProblem`) to ``path``."""
    if isinstance(doc, PenaltyProblem):
        doc = problem_to_dict(doc)
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def read_problem(path):
    """Return ``(problem, document)``."""
    with open(path) as fh:
        doc = json.load(fh)
    return problem_from_dict(doc), doc
