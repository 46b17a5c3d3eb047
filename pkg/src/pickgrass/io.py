"""JSON schemas for the domain types and a deterministic emitter.

Complex numbers travel as [re, im] pairs.  Floats are written with 17
significant digits so that parse -> emit -> parse is the identity and
identical inputs give byte-identical reports.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .ball import Divisor
from .errors import DimensionMismatch, ValidationError
from .fock import TruncVec
from .grassmann import CoinvariantModel
from .hypersurface import HomogPoly
from .pick import PickProblem
from .spectra import CommutingTuple


# ---------------------------------------------------------------------------
# emitter


def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_plain(obj):
    """Convert numpy and complex values to JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(v) -> str:
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_emit(x)}" for k, x in v.items()) + "}"
    if isinstance(v, list):
        return "[" + ", ".join(_emit(x) for x in v) + "]"
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _num(v)
    return json.dumps(v)


def dumps(obj) -> str:
    return _emit(to_plain(obj))


# ---------------------------------------------------------------------------
# parsing helpers


def _need(obj: dict, key: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"missing field {key!r}")
    return obj[key]


def parse_complex(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ValidationError(f"expected a complex number as [re, im], got {v!r}")


def parse_point(v) -> np.ndarray:
    if not isinstance(v, list):
        raise ValidationError("a point is a list of [re, im] pairs")
    return np.array([parse_complex(c) for c in v], dtype=complex)


def parse_matrix(v) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ValidationError("a matrix is a list of rows")
    rows = [[parse_complex(c) for c in r] for r in v]
    if len({len(r) for r in rows}) != 1:
        raise ValidationError("ragged matrix")
    return np.array(rows, dtype=complex)


# ---------------------------------------------------------------------------
# Divisor


def divisor_from_json(obj: dict, check_ball: bool = True) -> Divisor:
    d = int(_need(obj, "d"))
    entries = _need(obj, "points")
    pts, ms = [], []
    for e in entries:
        p = parse_point(_need(e, "coords"))
        if p.size != d:
            raise DimensionMismatch(f"point of length {p.size} in a d={d} divisor")
        pts.append(p)
        ms.append(int(e.get("mult", 1)))
    return Divisor.from_points(pts, ms, d=d, check_ball=check_ball)


def divisor_to_json(X: Divisor) -> dict:
    return {"d": X.d, "points": [{"coords": list(p), "mult": m} for p, m in zip(X.points, X.multiplicities)]}


# ---------------------------------------------------------------------------
# TruncVec


def truncvec_from_json(obj: dict) -> TruncVec:
    d, N = int(_need(obj, "d")), int(_need(obj, "N"))
    terms: dict = {}
    for t in _need(obj, "terms"):
        alpha = tuple(int(a) for a in _need(t, "alpha"))
        terms[alpha] = terms.get(alpha, 0) + parse_complex(_need(t, "coeff"))
    return TruncVec.from_terms(d, N, terms)


def truncvec_to_json(f: TruncVec) -> dict:
    return {"d": f.d, "N": f.N, "terms": [{"alpha": list(a), "coeff": c} for a, c in f.terms().items()]}


# ---------------------------------------------------------------------------
# CommutingTuple


def tuple_from_json(obj: dict) -> CommutingTuple:
    n, d = int(_need(obj, "n")), int(_need(obj, "d"))
    mats = [parse_matrix(m) for m in _need(obj, "matrices")]
    if len(mats) != d or any(m.shape != (n, n) for m in mats):
        raise DimensionMismatch(f"expected {d} matrices of size {n} x {n}")
    return CommutingTuple(np.array(mats))


def tuple_to_json(A: CommutingTuple) -> dict:
    return {"n": A.n, "d": A.d, "matrices": [m.tolist() for m in A.matrices]}


# ---------------------------------------------------------------------------
# HomogPoly


def poly_from_json(obj: dict) -> HomogPoly:
    d = int(_need(obj, "d"))
    terms: dict = {}
    for t in _need(obj, "terms"):
        alpha = tuple(int(a) for a in _need(t, "alpha"))
        terms[alpha] = terms.get(alpha, 0) + parse_complex(_need(t, "coeff"))
    p = HomogPoly.create(terms, d=d, distinguished=obj.get("distinguished"))
    if "degree" in obj and int(obj["degree"]) != p.degree:
        raise ValidationError(f"declared degree {obj['degree']} differs from the terms ({p.degree})")
    return p


def poly_to_json(p: HomogPoly) -> dict:
    return p.to_json()


# ---------------------------------------------------------------------------
# PickProblem


def _parse_target(t):
    # a matrix target is a list of rows of [re, im] pairs
    if isinstance(t, list) and t and isinstance(t[0], list) and t[0] and isinstance(t[0][0], list):
        return parse_matrix(t)
    return parse_complex(t)


def pick_from_json(obj: dict) -> PickProblem:
    X = _need(obj, "points")
    targets = _need(obj, "targets")
    pts = []
    for e in X:
        p = parse_point(_need(e, "coords"))
        if int(e.get("mult", 1)) != 1:
            raise ValidationError("interpolation nodes carry multiplicity 1")
        pts.append(p)
    return PickProblem.create(pts, [_parse_target(t) for t in targets])


def pick_to_json(p: PickProblem) -> dict:
    return {
        "d": p.points[0].size,
        "points": [{"coords": list(x), "mult": 1} for x in p.points],
        "targets": [t.tolist() if t.ndim == 2 else complex(t) for t in p.targets],
    }


# ---------------------------------------------------------------------------
# CoinvariantModel


def model_from_json(obj: dict) -> CoinvariantModel:
    groups = []
    for g in _need(obj, "groups"):
        lam = parse_point(_need(g, "base"))
        vecs = []
        for v in _need(g, "vectors"):
            coeffs: dict = {}
            for t in v:
                alpha = tuple(int(a) for a in _need(t, "alpha"))
                coeffs[alpha] = coeffs.get(alpha, 0) + parse_complex(_need(t, "coeff"))
            vecs.append(coeffs)
        groups.append((lam, vecs))
    m = CoinvariantModel.from_groups(groups)
    if "d" in obj and int(obj["d"]) != m.d:
        raise DimensionMismatch("declared d differs from the base points")
    return m


def model_to_json(m: CoinvariantModel) -> dict:
    return {
        "d": m.d,
        "groups": [
            {
                "base": list(g.lam),
                "vectors": [[{"alpha": list(a), "coeff": c} for a, c in v.items()] for v in g.vectors],
            }
            for g in m.groups
        ],
    }


SCHEMAS = {
    "Divisor": {"d": "int", "points": [{"coords": "[[re, im], ...]", "mult": "int"}]},
    "TruncVec": {"d": "int", "N": "int", "terms": [{"alpha": "[int, ...]", "coeff": "[re, im]"}]},
    "Tuple": {"n": "int", "d": "int", "matrices": "[[[re, im], ...], ...] per matrix"},
    "HomogPoly": {
        "d": "int",
        "degree": "int",
        "terms": [{"alpha": "[int, ...]", "coeff": "[re, im]"}],
        "distinguished": "int (0-based)",
    },
    "PickProblem": {"d": "int", "points": "as Divisor, mult 1", "targets": "[[re, im], ...] or r x r matrices"},
    "Model": {"d": "int", "groups": [{"base": "[[re, im], ...]", "vectors": "[[{alpha, coeff}, ...], ...]"}]},
}
