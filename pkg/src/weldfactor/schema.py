"""Versioned JSON encoding of curves, maps, problems and results.

Complex numbers are ``[re, im]`` pairs and the point at infinity is the
string ``"inf"``.  Python's ``repr`` of a float round-trips exactly, so every
coefficient survives a serialise/parse cycle bit for bit.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Any

import numpy as np

from .confmap import (BoundaryCorrespondence, CompositeMap, ConformalMap, InverseMap,
                      LaurentSeriesMap, MoebiusMap, PowerSeriesMap)
from .curves import INFINITY, AnalyticCurve, DomainSpec, is_infinite
from .errors import SchemaError

SCHEMA_VERSION = 1
VOLATILE_KEYS = frozenset({"seconds", "created"})


# ---------------------------------------------------------------- scalars

def enc_complex(z) -> Any:
    z = complex(z)
    if is_infinite(z):
        return "inf"
    return [z.real, z.imag]


def dec_complex(v) -> complex:
    if v == "inf":
        return INFINITY
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if (isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        return complex(float(v[0]), float(v[1]))
    raise SchemaError(f"expected a complex number [re, im] or 'inf', got {v!r}")


def enc_complex_list(a) -> list:
    return [enc_complex(z) for z in np.asarray(a, dtype=complex).ravel()]


def dec_complex_list(v) -> np.ndarray:
    if not isinstance(v, list):
        raise SchemaError(f"expected a list of complex numbers, got {type(v).__name__}")
    return np.array([dec_complex(x) for x in v], dtype=complex)


def _req(obj: dict, key: str, kind=None):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected an object holding '{key}'")
    if key not in obj:
        raise SchemaError(f"missing field '{key}'")
    v = obj[key]
    if kind is not None and not isinstance(v, kind):
        raise SchemaError(f"field '{key}' has the wrong type")
    return v


def _int(obj, key) -> int:
    v = _req(obj, key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"field '{key}' must be an integer")
    return v


# ---------------------------------------------------------------- geometry

def enc_curve(c: AnalyticCurve) -> dict:
    return {"coeffs": enc_complex_list(c.coeffs), "k_min": c.k_min, "orientation": c.orientation}


def dec_curve(v) -> AnalyticCurve:
    coeffs = dec_complex_list(_req(v, "coeffs"))
    orient = _int(v, "orientation")
    if orient not in (1, -1) or coeffs.size == 0:
        raise SchemaError("curve needs coefficients and orientation +1 or -1")
    return AnalyticCurve(coeffs, _int(v, "k_min"), orient)


def enc_corr(b: BoundaryCorrespondence) -> dict:
    return {"periodic_coeffs": enc_complex_list(b.coeffs), "k_min": b.k_min, "direction": b.direction}


def dec_corr(v) -> BoundaryCorrespondence:
    d = _int(v, "direction")
    if d not in (1, -1):
        raise SchemaError("correspondence direction must be +1 or -1")
    k_min = v.get("k_min", 0) if isinstance(v, dict) else 0
    if isinstance(k_min, bool) or not isinstance(k_min, int):
        raise SchemaError("field 'k_min' must be an integer")
    return BoundaryCorrespondence(dec_complex_list(_req(v, "periodic_coeffs")), k_min, d)


def enc_domain(d: DomainSpec | None):
    if d is None:
        return None
    return {"curves": [enc_curve(c) for c in d.curves], "base_point": enc_complex(d.base_point)}


def dec_domain(v) -> DomainSpec | None:
    if v is None:
        return None
    curves = _req(v, "curves", list)
    return DomainSpec([dec_curve(c) for c in curves], dec_complex(v.get("base_point", "inf")))


# ---------------------------------------------------------------- maps

def enc_map(f: ConformalMap) -> dict:
    if isinstance(f, MoebiusMap):
        out = {"kind": "moebius", "abcd": enc_complex_list([f.a, f.b, f.c, f.d])}
    elif isinstance(f, PowerSeriesMap):
        out = {"kind": "power", "coeffs": enc_complex_list(f.coeffs)}
    elif isinstance(f, LaurentSeriesMap):
        out = {"kind": "laurent", "lam": enc_complex(f.lam), "coeffs": enc_complex_list(f.coeffs)}
    elif isinstance(f, CompositeMap):
        out = {"kind": "composite", "factors": [enc_map(g) for g in f.factors]}
    elif isinstance(f, InverseMap):
        out = {"kind": "inverse", "inner": enc_map(f.inner)}
    else:
        raise SchemaError(f"cannot encode map of type {type(f).__name__}")
    out["domain"] = enc_domain(f.domain)
    return out


def dec_map(v) -> ConformalMap:
    kind = _req(v, "kind", str)
    dom = dec_domain(v.get("domain"))
    try:
        if kind == "moebius":
            abcd = dec_complex_list(_req(v, "abcd"))
            if abcd.size != 4:
                raise SchemaError("moebius map needs four coefficients")
            return _moebius_exact(abcd, dom)
        if kind == "power":
            return PowerSeriesMap(dec_complex_list(_req(v, "coeffs")), domain=dom)
        if kind == "laurent":
            return LaurentSeriesMap(dec_complex(_req(v, "lam")), dec_complex_list(_req(v, "coeffs")), domain=dom)
        if kind == "composite":
            return CompositeMap(tuple(dec_map(g) for g in _req(v, "factors", list)), domain=dom)
        if kind == "inverse":
            return InverseMap(dec_map(_req(v, "inner")), domain=dom)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"invalid {kind} map: {exc}") from exc
    raise SchemaError(f"unknown map kind '{kind}'")


def _moebius_exact(abcd: np.ndarray, dom) -> MoebiusMap:
    # stored coefficients are already normalised; bypass renormalisation so they stay bit-exact
    m = MoebiusMap(*abcd, domain=dom)
    for name, val in zip("abcd", abcd):
        object.__setattr__(m, name, complex(val))
    return m


# ---------------------------------------------------------------- documents

def _doc(kind: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, **body}


def _check_doc(v, kind: str | None = None) -> str:
    if not isinstance(v, dict):
        raise SchemaError("document must be a JSON object")
    ver = v.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {ver!r}")
    k = v.get("kind")
    if kind is not None and k != kind:
        raise SchemaError(f"expected a '{kind}' document, got '{k}'")
    return k


def enc_problem(p) -> dict:
    body = {
        "domain": enc_domain(p.domain),
        "boundary_data": [{"target_curve": enc_curve(b.target), "correspondence": enc_corr(b.correspondence)}
                          for b in p.boundary_data],
        "interior_samples": [[enc_complex(z), enc_complex(g)] for z, g in p.interior_samples],
    }
    if p.target_base_point is not None:
        body["target_base_point"] = enc_complex(p.target_base_point)
    return _doc("problem", body)


def dec_problem(v):
    from .factorize import BoundaryDatum, FactorizationProblem
    _check_doc(v, "problem")
    dom = dec_domain(_req(v, "domain", dict))
    data = [BoundaryDatum(dec_curve(_req(b, "target_curve")), dec_corr(_req(b, "correspondence")))
            for b in _req(v, "boundary_data", list)]
    raw = v.get("interior_samples", [])
    if not isinstance(raw, list) or any(not isinstance(s, list) or len(s) != 2 for s in raw):
        raise SchemaError("interior_samples must be a list of [z, G(z)] pairs")
    samples = np.array([[dec_complex(a), dec_complex(b)] for a, b in raw], dtype=complex).reshape(-1, 2)
    tb = v.get("target_base_point")
    return FactorizationProblem(dom, data, samples, None if tb is None else dec_complex(tb))


def enc_result(r) -> dict:
    S, T = r.chart
    return _doc("factorization", {
        "factors": [enc_map(f) for f in r.factors],
        "permutation": list(r.permutation),
        "peel_order": list(r.peel_order),
        "curve_counts": list(r.curve_counts),
        "moebius": enc_map(r.moebius),
        "moebius_residual": r.moebius_residual,
        "chart": {"source": None if S is None else enc_map(S), "target": None if T is None else enc_map(T)},
        "diagnostics": r.diagnostics,
    })


def dec_result(v):
    from .factorize import FactorizationResult
    _check_doc(v, "factorization")
    chart = v.get("chart") or {}
    S = chart.get("source")
    T = chart.get("target")
    return FactorizationResult(
        factors=[dec_map(f) for f in _req(v, "factors", list)],
        permutation=tuple(_req(v, "permutation", list)),
        peel_order=tuple(v.get("peel_order", [])),
        curve_counts=list(v.get("curve_counts", [])),
        diagnostics=list(v.get("diagnostics", [])),
        moebius=dec_map(_req(v, "moebius")),
        moebius_residual=float(v.get("moebius_residual", math.nan)),
        chart=(None if S is None else dec_map(S), None if T is None else dec_map(T)),
    )


def enc_welding(s) -> dict:
    return _doc("welding", {"f_int": enc_map(s.f_int), "f_ext": enc_map(s.f_ext),
                            "weld_curve": enc_curve(s.weld_curve), "residual": s.residual,
                            "iterations": s.iterations, "stage": s.stage})


def dec_welding(v):
    from .welding import WeldingSolution
    _check_doc(v, "welding")
    return WeldingSolution(dec_map(_req(v, "f_int")), dec_map(_req(v, "f_ext")),
                           dec_curve(_req(v, "weld_curve")), float(_req(v, "residual")),
                           int(v.get("iterations", 1)), float(v.get("stage", 1.0)))


def enc_riemann(s, side: str) -> dict:
    return _doc("riemann", {"side": side, "map": enc_map(s.map), "correspondence": enc_corr(s.correspondence),
                            "residual": s.residual, "iterations": s.iterations, "stages": s.stages})


def enc_truth(fix) -> dict:
    return _doc("truth", {"map": enc_map(fix.truth), "permutation": list(fix.permutation), "log": fix.log})


def enc_curve_doc(c: AnalyticCurve) -> dict:
    return _doc("curve", {"curve": enc_curve(c)})


def enc_domain_doc(d: DomainSpec) -> dict:
    return _doc("domain", {"domain": enc_domain(d)})


def enc_corr_doc(b: BoundaryCorrespondence) -> dict:
    return _doc("correspondence", {"correspondence": enc_corr(b)})


def enc_metrics(m: dict) -> dict:
    return _doc("metrics", m)


# ---------------------------------------------------------------- files

def plain(obj, *, deterministic: bool = False):
    """Recursively convert numpy scalars, complex numbers and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): plain(v, deterministic=deterministic) for k, v in obj.items()
                if not (deterministic and k in VOLATILE_KEYS)}
    if isinstance(obj, (list, tuple)):
        return [plain(v, deterministic=deterministic) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist(), deterministic=deterministic)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (complex, np.complexfloating)):
        return enc_complex(obj)
    return obj


def dumps(doc: dict, *, deterministic: bool = False) -> str:
    return json.dumps(plain(doc, deterministic=deterministic), sort_keys=True, indent=1,
                      allow_nan=False) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temporary sibling file, then rename it over ``path``."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
