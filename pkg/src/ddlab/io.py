"""JSON/CSV readers and writers. Exact rationals travel as "p/q" strings."""

import csv
import hashlib
import io as _io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ParseError
from .exact import frac_str, to_fraction
from .lattice import BUILTIN_GRAMS, GramMatrix, LatticeModel, builtin
from .pointset import LatticePointSet


def load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}") from None
    if not text.strip():
        raise ParseError(f"{path}:1:1: empty file")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _rational(x, what):
    try:
        return to_fraction(x)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ParseError(f"{what}: not an exact rational: {x!r}") from None


def parse_lattice(obj) -> LatticeModel:
    if isinstance(obj, str):
        if obj not in BUILTIN_GRAMS:
            raise ParseError(f"unknown lattice label {obj!r} (built-ins: {', '.join(BUILTIN_GRAMS)})")
        return builtin(obj)
    if isinstance(obj, dict) and "gram" in obj:
        g = obj["gram"]
        if not (isinstance(g, list) and len(g) == 2 and all(isinstance(r, list) and len(r) == 2 for r in g)):
            raise ParseError("gram must be a 2x2 array")
        rows = [[_rational(x, "gram") for x in r] for r in g]
        if rows[0][1] != rows[1][0]:
            raise ParseError("gram must be symmetric")
        gram = GramMatrix.of(rows)
        return LatticeModel(gram, obj.get("label", ""), obj.get("normalization", "native"))
    raise ParseError("lattice must be a built-in label or {\"gram\": [[..],[..]]}")


def parse_vec(obj, what="vector"):
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2):
        raise ParseError(f"{what} must have two entries")
    return tuple(_rational(x, what) for x in obj)


def parse_point_set(obj) -> LatticePointSet:
    if not isinstance(obj, dict):
        raise ParseError("point set must be a JSON object")
    if "points" not in obj or "lattice" not in obj:
        raise ParseError("point set needs \"lattice\" and \"points\"")
    model = parse_lattice(obj["lattice"])
    offset = parse_vec(obj.get("offset", ["0", "0"]), "offset")
    pts = obj["points"]
    if not isinstance(pts, list) or not pts:
        raise ParseError("points must be a nonempty array")
    for i, p in enumerate(pts):
        if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, int) for x in p)):
            raise ParseError(f"points[{i}] must be a pair of integers")
    return LatticePointSet(model, np.array(pts, dtype=np.int64), offset)


def read_point_set(path) -> LatticePointSet:
    return parse_point_set(load_json(path))


def point_set_json(X: LatticePointSet) -> dict:
    lat = X.model.label if X.model.label in BUILTIN_GRAMS else {"gram": X.model.gram.to_json(),
                                                                 "label": X.model.label}
    return {"lattice": lat, "offset": X.offset.to_json(), "points": X.points.tolist()}


def parse_window(obj) -> dict:
    """Normalized window spec: lattice model, shape and exact parameters."""
    if not isinstance(obj, dict) or "lattice" not in obj:
        raise ParseError("window spec needs \"lattice\"")
    model = parse_lattice(obj["lattice"])
    shape = obj.get("shape", "disk")
    out = {"model": model, "shape": shape,
           "offset": parse_vec(obj.get("offset", ["0", "0"]), "offset"),
           "z": parse_vec(obj.get("z", ["0", "0"]), "z")}
    if shape == "disk":
        if "R_sq" not in obj:
            raise ParseError("disk window needs R_sq")
        out["R_sq"] = _rational(obj["R_sq"], "R_sq")
        out["c"] = _rational(obj.get("c", "0"), "c")
    elif shape == "rect":
        L = obj.get("L")
        if not (isinstance(L, list) and len(L) == 2 and all(isinstance(x, int) and x >= 1 for x in L)):
            raise ParseError("rect window needs L: [L1, L2] positive integers")
        out["L"] = tuple(L)
        out["a0"] = tuple(obj.get("a0", [0, 0]))
    else:
        raise ParseError(f"unknown window shape {shape!r}")
    return out


SPECTRUM_COLUMNS = ["key", "m", "distance_sq_numer", "distance_sq_denom"]


def spectrum_csv(spec) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPECTRUM_COLUMNS)
    for row in spec.rows():
        w.writerow(row)
    return buf.getvalue()


def read_spectrum_csv(text: str):
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or rows[0] != SPECTRUM_COLUMNS:
        raise ParseError("spectrum CSV header mismatch")
    return [(int(a), int(b), Fraction(int(c), int(d))) for a, b, c, d in rows[1:]]


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, Fractions as strings."""
    def default(o):
        if isinstance(o, Fraction):
            return frac_str(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"not serializable: {type(o).__name__}")
    return json.dumps(obj, sort_keys=True, indent=2, default=default) + "\n"
