"""Batch driver: weilcheck [run] [flags]  |  weilcheck grid --what ... --out file.csv

Exit codes: 0 all checks pass, 1 some check failed, 2 usage / configuration error.
stdout gets a one-line summary, stderr the diagnostics.  The JSON report is
byte-stable for a fixed config, seed and version; wall times and timestamps
live in its "timing" field only.
"""
import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import domain_geometry as dg
from . import fock_weil as fw
from . import green_numeric as gn
from . import schur_tensor as st
from .schur_tensor import UsageError

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

REPORT_SCHEMA = "weilcheck.report/1"
RUNTIME_KEYS = ("out", "cache", "jobs")

SYMBOLIC_CAPS = {"orthogonal": 8, "unitary": (5, 5)}

DEFAULT_CONFIG = {
    "suite": {"name": "default", "seed": 0, "cases": ["orthogonal", "unitary"],
              "suite": "all", "jobs": 1, "out": "weilcheck-out", "cache": ""},
    "symbolic": {
        "orth_b_max": 6, "unit_b_max": [4, 4], "invariance_max": [3, 3],
        "genus2_orth_max": 6, "genus2_unit_max": [4, 4],
        "cohomology_orth_max": 4, "cohomology_unit_max": [3, 3],
        "relation_sign": "printed", "omega_variant": "default",
        "det_convention": "t11t22-t12t21",
        "properties_orth_max": 6, "properties_unit_max": [4, 4],
    },
    "numeric": {
        "orth_lambda": [0, 1, 2], "unit_lambda": [[0, 0], [1, 0], [1, 1]],
        "dual_points": 50, "dual_tol": 1e-9,
        "green_points": 20, "green_tol0": 1e-4, "green_tol": 1e-3, "green_h": 1e-3,
        "exchange_tol": 1e-3, "lambda0_tol": 1e-3, "weyl": "J",
        "whittaker_M": 64.0, "whittaker_tol": 1e-6, "reality_tol": 1e-6,
        "decay_threshold": 1e-20,
    },
    "battery": {
        "orthogonal": [
            [[1.0, 0.3, -0.2], [0.4, 0.9, 0.5]],
            [[1.2, 0.1, 0.0], [1.5, 1.2, 0.6]],
            [[0.7, -0.4, 0.3], [1.1, 0.2, 0.9]],
            [[0.3, 1.0, 0.2], [1.0, 0.2, -0.5]],
        ],
        "unitary": [
            [["1.0", "0.3+0.2j"], ["0.2-0.1j", "0.9"]],
            [["1.1+0.2j", "0.4"], ["0.8", "0.7-0.5j"]],
            [["0.9", "0.1j"], ["1.3", "1.1+0.3j"]],
            [["0.6-0.3j", "0.2"], ["0.5j", "1.0+0.1j"]],
        ],
    },
    "lambda0": {
        "orthogonal": [[[0.5, 0.0], [0.0, -0.5]], [[1.0, 0.0], [0.0, -0.25]],
                       [[0.3, 0.0], [0.0, -0.8]], [[0.2, 0.5], [0.5, -0.1]],
                       [[-0.3, 0.4], [0.4, 0.2]]],
        "unitary": [[["0.5", "0"], ["0", "-0.5"]], [["1.0", "0"], ["0", "-0.25"]],
                    [["0.3", "0"], ["0", "-0.8"]], [["0.4", "0.3+0.2j"], ["0.3-0.2j", "-0.2"]],
                    [["-0.3", "0.4j"], ["-0.4j", "0.2"]]],
    },
    "quadrature": {"rtol": 1e-8, "atol": 1e-13, "max_depth": 4, "eps": 1e-2, "R": 12.0,
                   "t_policy": "closed-form", "t_max": 64.0},
}


# ---------------------------------------------------------------------------
# configuration

def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None):
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise UsageError(f"config {path}: {e}")
        unknown = set(user) - set(DEFAULT_CONFIG)
        if unknown:
            raise UsageError(f"unknown config sections: {sorted(unknown)}")
        cfg = _merge(cfg, user)
    return cfg


def _pair(v, name):
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(a, int) for a in v)):
        raise UsageError(f"{name} must be a pair of integers, got {v!r}")
    return tuple(v)


def validate_config(cfg):
    s, sy, nu = cfg["suite"], cfg["symbolic"], cfg["numeric"]
    if not isinstance(s.get("seed"), int):
        raise UsageError("suite.seed must be an integer")
    for c in s["cases"]:
        if c not in gn.CASES:
            raise UsageError(f"unknown case {c!r}")
    if s["suite"] not in ("symbolic", "numeric", "all"):
        raise UsageError(f"suite must be symbolic|numeric|all, got {s['suite']!r}")
    ocap, ucap = SYMBOLIC_CAPS["orthogonal"], SYMBOLIC_CAPS["unitary"]
    for key in ("orth_b_max", "genus2_orth_max", "cohomology_orth_max", "properties_orth_max"):
        if not isinstance(sy[key], int) or sy[key] < 0:
            raise UsageError(f"symbolic.{key} must be a nonnegative integer")
        if sy[key] > ocap:
            raise UsageError(f"symbolic.{key} = {sy[key]} exceeds the orthogonal cap b <= {ocap}")
    for key in ("unit_b_max", "invariance_max", "genus2_unit_max", "cohomology_unit_max",
                "properties_unit_max"):
        a, c = _pair(sy[key], f"symbolic.{key}")
        if a < 0 or c < 0:
            raise UsageError(f"symbolic.{key} must be nonnegative")
        if a > ucap[0] or c > ucap[1]:
            raise UsageError(f"symbolic.{key} = {[a, c]} exceeds the unitary cap {list(ucap)}")
    if sy["relation_sign"] not in fw.RELATION_SIGNS:
        raise UsageError(f"unknown relation_sign {sy['relation_sign']!r}")
    if sy["det_convention"] not in fw.DET_CONVENTIONS:
        raise UsageError(f"unknown det_convention {sy['det_convention']!r}")
    for b in nu["orth_lambda"]:
        if not isinstance(b, int) or b < 0 or b > gn.CAPS["orthogonal"]:
            raise UsageError(f"numeric.orth_lambda entry {b!r} outside 0..{gn.CAPS['orthogonal']}")
    for lam in nu["unit_lambda"]:
        a, c = _pair(lam, "numeric.unit_lambda entry")
        if a > gn.CAPS["unitary"][0] or c > gn.CAPS["unitary"][1] or a < 0 or c < 0:
            raise UsageError(f"numeric.unit_lambda entry {lam!r} outside the cap {list(gn.CAPS['unitary'])}")
    if nu["weyl"] not in gn.WEYL_CONVENTIONS:
        raise UsageError(f"unknown weyl convention {nu['weyl']!r}")
    try:
        gn.QuadratureSpec(seed=s["seed"], **cfg["quadrature"])
    except TypeError as e:
        raise UsageError(f"quadrature: {e}")
    for case in s["cases"]:
        for x1, x2 in _battery(cfg, case):
            gn._check_regular(case, x1, x2)
        for T in cfg["lambda0"].get(case, []):
            _matrix(case, T)
    return cfg


def _cnum(v):
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            raise UsageError(f"cannot parse number {v!r}")
    return v


def _vector(case, v):
    vals = [_cnum(a) for a in v]
    if case == "orthogonal":
        if any(isinstance(a, complex) and a.imag for a in vals):
            raise UsageError("orthogonal vectors must be real")
        vals = [float(np.real(a)) for a in vals]
    else:
        vals = [complex(a) for a in vals]
    return dg.ModelVector(case, tuple(vals))


def _matrix(case, T):
    M = np.array([[_cnum(a) for a in row] for row in T],
                 dtype=complex if case == "unitary" else float)
    if M.shape != (2, 2):
        raise UsageError("moment matrices must be 2x2")
    if not np.allclose(M, np.conj(M.T)):
        raise UsageError("moment matrix must be symmetric / hermitian")
    if float(np.real(np.linalg.det(M))) >= 0:
        raise UsageError("lambda0 moment matrices need det T < 0")
    return M


def _battery(cfg, case):
    entry = cfg["battery"].get(case, [])
    if isinstance(entry, dict) and "seeded" in entry:
        return seeded_battery(case, int(entry["seeded"]), cfg["suite"]["seed"])
    return [(_vector(case, a), _vector(case, b)) for a, b in entry]


def seeded_battery(case, n, seed):
    """n random pairs with det T < 0, from the config seed."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        if case == "orthogonal":
            a, b = rng.uniform(-1.2, 1.2, 3), rng.uniform(-1.2, 1.2, 3)
        else:
            a = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
            b = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2)
        x1, x2 = dg.ModelVector(case, tuple(a)), dg.ModelVector(case, tuple(b))
        T = dg.moment_matrix(case, x1, x2)
        if float(np.real(np.linalg.det(T))) < -0.02 and max(x1.norm2(), x2.norm2()) < 3:
            out.append((x1, x2))
    return out


# ---------------------------------------------------------------------------
# check plan

def _vec_json(x):
    a = x.array
    if x.case == "orthogonal":
        return [float(v) for v in a]
    return [repr(complex(v)) for v in a]


def plan_checks(cfg):
    s, sy, nu = cfg["suite"], cfg["symbolic"], cfg["numeric"]
    checks = []
    add = lambda suite, kind, **p: checks.append({"suite": suite, "kind": kind, "params": p})
    cases = s["cases"]
    if s["suite"] in ("symbolic", "all"):
        ov = sy["omega_variant"]
        if "orthogonal" in cases:
            for b in range(sy["orth_b_max"] + 1):
                add("symbolic", "holomorphy", case="orthogonal", b=b, omega_variant=ov)
            for b in range(sy["genus2_orth_max"] + 1):
                add("symbolic", "genus2", case="orthogonal", b=b, det_convention=sy["det_convention"])
            for b in range(sy["cohomology_orth_max"] + 1):
                add("symbolic", "cohomology", case="orthogonal", b=b, sign=sy["relation_sign"])
            add("symbolic", "properties", case="orthogonal", max_degree=sy["properties_orth_max"],
                seed=s["seed"])
        if "unitary" in cases:
            ub = sy["unit_b_max"]
            for a in range(ub[0] + 1):
                for c in range(ub[1] + 1):
                    add("symbolic", "holomorphy", case="unitary", b=[a, c], omega_variant=ov)
            iv = sy["invariance_max"]
            for a in range(iv[0] + 1):
                for c in range(iv[1] + 1):
                    add("symbolic", "invariance", case="unitary", b=[a, c])
            gm = sy["genus2_unit_max"]
            for a in range(gm[0] + 1):
                for c in range(gm[1] + 1):
                    add("symbolic", "genus2", case="unitary", b=[a, c],
                        det_convention=sy["det_convention"])
            cm = sy["cohomology_unit_max"]
            for a in range(cm[0] + 1):
                for c in range(cm[1] + 1):
                    add("symbolic", "cohomology", case="unitary", b=[a, c], sign=sy["relation_sign"])
            add("symbolic", "properties", case="unitary", max_degree=list(sy["properties_unit_max"]),
                seed=s["seed"])
    if s["suite"] in ("numeric", "all"):
        q = dict(cfg["quadrature"], seed=s["seed"])
        for case in cases:
            lams = nu["orth_lambda"] if case == "orthogonal" else [list(v) for v in nu["unit_lambda"]]
            battery = _battery(cfg, case)
            for lam in lams:
                add("numeric", "green_dual", case=case, lam=lam, n=nu["dual_points"],
                    tol=nu["dual_tol"], seed=s["seed"])
                zero = lam == 0 or lam == [0, 0]
                add("numeric", "green_equation", case=case, lam=lam, n=nu["green_points"],
                    tol=nu["green_tol0"] if zero else nu["green_tol"], h=nu["green_h"],
                    seed=s["seed"])
                for i, (x1, x2) in enumerate(battery):
                    add("numeric", "exchange", case=case, lam=lam, config=i, x1=_vec_json(x1),
                        x2=_vec_json(x2), tol=nu["exchange_tol"], reality_tol=nu["reality_tol"],
                        spec=q)
                for i, (x1, x2) in enumerate(battery):
                    add("numeric", "whittaker_tail", case=case, lam=lam, config=i,
                        x1=_vec_json(x1), x2=_vec_json(x2), M=nu["whittaker_M"],
                        tol=nu["whittaker_tol"], spec=q)
            vecs = []
            for x1, x2 in battery:
                for x in (x1, x2):
                    if _vec_json(x) not in vecs:
                        vecs.append(_vec_json(x))
            for v in vecs:
                add("numeric", "boundary_decay", case=case, lam=lams[-1], x=v,
                    threshold=nu["decay_threshold"])
            for i, T in enumerate(cfg["lambda0"].get(case, [])):
                M = _matrix(case, T)
                Tj = (M.tolist() if case == "orthogonal"
                      else [[repr(complex(a)) for a in row] for row in M])
                add("numeric", "lambda0_ratio", case=case, config=i, T=Tj, tol=nu["lambda0_tol"],
                    weyl=nu["weyl"], spec=q)
    for c in checks:
        c["name"] = _check_name(c)
    return checks


def _check_name(c):
    p = c["params"]
    bits = [c["kind"], p["case"]]
    for key in ("b", "lam", "config", "max_degree"):
        if key in p:
            v = p[key]
            bits.append(f"{key}=" + ("x".join(map(str, v)) if isinstance(v, list) else str(v)))
    if c["kind"] == "boundary_decay":
        bits.append("x=" + ",".join(str(a) for a in p["x"]))
    return ":".join(bits)


# ---------------------------------------------------------------------------
# check execution

def _lam(case, lam):
    return lam if case == "orthogonal" else tuple(lam)


def _spec(p):
    return gn.QuadratureSpec(**p["spec"]) if "spec" in p else gn.QuadratureSpec()


def _clean(v):
    """JSON-safe values: complex -> [re, im], numpy scalars -> python."""
    if isinstance(v, dict):
        return {str(k): _clean(a) for k, a in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(a) for a in v]
    if isinstance(v, (complex, np.complexfloating)):
        return [float(np.real(v)), float(np.imag(v))]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _fock_report(r):
    d = r.to_dict()
    out = {"passed": r.passed, "details": d.get("details", {})}
    if not r.passed and "difference" in d:
        out["difference"] = d["difference"]
    return out


def _run_symbolic(kind, p):
    case = p["case"]
    if kind == "holomorphy":
        b = _lam(case, p["b"])
        r = fw.verify_holomorphy(case, b, p.get("omega_variant", "default"))
        return r.passed, _fock_report(r), "exact"
    if kind == "invariance":
        r = fw.verify_invariance_unitary(tuple(p["b"]))
        return r.passed, _fock_report(r), "exact"
    if kind == "genus2":
        r = fw.decompose_genus2(case, _lam(case, p["b"]), p["det_convention"])
        return r.passed, _fock_report(r), "exact"
    if kind == "cohomology":
        rs = fw.cohomology_suite(case, _lam(case, p["b"]), p["sign"])
        vals = {"relations": [{"params": r.params, **_fock_report(r)} for r in rs]}
        return all(r.passed for r in rs), vals, "exact"
    if kind == "properties":
        md = p["max_degree"] if case == "orthogonal" else tuple(p["max_degree"])
        res, info = st.property_suite(case, md, seed=p["seed"])
        return all(res.values()), {"properties": res, **info}, "exact"
    raise UsageError(f"unknown symbolic check {kind!r}")


def _random_pairs(case, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        if case == "orthogonal":
            x = dg.ModelVector(case, tuple(rng.normal(size=3)))
            p = dg.DomainPoint(case, tuple(rng.normal(size=2)), int(rng.choice([1, -1])))
        else:
            x = dg.ModelVector(case, tuple(rng.normal(size=2) + 1j * rng.normal(size=2)))
            w = rng.uniform(-0.6, 0.6, 2)
            p = dg.DomainPoint(case, tuple(w))
        out.append((x, p))
    return out


def green_points(case, lam, n, seed, h=1e-3):
    """Seeded generic (x, p) with p well away from the divisor and phi not negligible."""
    rng = np.random.default_rng(seed + 7919)
    out = []
    while len(out) < n:
        if case == "orthogonal":
            x = dg.ModelVector(case, tuple(rng.normal(size=3) * 0.8))
            comp = int(rng.choice([1, -1]))
        else:
            x = dg.ModelVector(case, tuple(rng.normal(size=2) * 0.8 + 1j * rng.normal(size=2) * 0.8))
            comp = 1
        z = complex(*rng.uniform(-0.55, 0.55, 2))
        if abs(z) > 0.7:
            continue
        p = gn.chart_point(case, z, comp)
        if any(gn.geodesic_distance(sp, p) < 0.1 for sp, _ in dg.special_points(x)
               if sp.component == comp):
            continue
        gvec, phi = gn._sections(case, lam, x, p)
        if np.max(np.abs(gn.schur_matrix(case, lam) @ phi)) < 1e-3:
            continue
        out.append((x, p))
    return out


def _run_numeric(kind, p):
    case = p["case"]
    if kind == "green_dual":
        lam = _lam(case, p["lam"])
        worst = 0.0
        for x, pt in _random_pairs(case, p["n"], p["seed"]):
            a = complex(gn.green_profile(case, lam, x, pt))
            b = complex(gn.green_profile(case, lam, x, pt, "quadrature"))
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
        return worst < p["tol"], {"max_rel_diff": worst, "points": p["n"]}, p["tol"]
    if kind == "green_equation":
        lam = _lam(case, p["lam"])
        rows = []
        for x, pt in green_points(case, lam, p["n"], p["seed"]):
            d = gn.greens_equation_residual(x, pt, lam, p["h"], details=True)
            rows.append(d)
        worst = max(r["residual"] for r in rows)
        orders = [r["order"] for r in rows if r["residual"] > 1e-9]
        order_ok = all(1.8 < o < 2.2 for o in orders) and len(orders) > 0
        vals = {"max_residual": worst, "max_richardson": max(r["richardson"] for r in rows),
                "orders": [min(orders), max(orders)] if orders else [],
                "max_rel_residual": max(r["residual"] / r["scale"] for r in rows),
                "max_transversality_leak": max(r["transversality_leak"] for r in rows),
                "points": len(rows)}
        return worst < p["tol"] and order_ok, vals, p["tol"]
    if kind == "exchange":
        lam = _lam(case, p["lam"])
        x1, x2 = _vector(case, p["x1"]), _vector(case, p["x2"])
        spec = _spec(p)
        s = gn.star_integral(x1, x2, lam, spec)
        e, info = gn.exchange_rhs(x1, x2, lam, spec, with_report=True)
        rel = abs(s.total - e) / abs(e)
        ok = rel < p["tol"]
        vals = {"star": s.total, "delta": s.delta, "tail": s.tail, "exchange": e, "rel_diff": rel,
                "star_error": s.error, "components": s.components}
        if case == "orthogonal":
            imag = abs(s.total.imag) / abs(s.total)
            vals["reality"] = imag
            ok = ok and imag < p["reality_tol"]
        return ok, vals, p["tol"]
    if kind == "whittaker_tail":
        lam = _lam(case, p["lam"])
        x1, x2 = _vector(case, p["x1"]), _vector(case, p["x2"])
        v = gn.whittaker_tail(x1, x2, lam, p["M"], _spec(p))
        return abs(v) < p["tol"], {"tail": v, "abs": abs(v), "M": p["M"]}, p["tol"]
    if kind == "boundary_decay":
        lam = _lam(case, p["lam"])
        x = _vector(case, p["x"])
        r = gn.boundary_decay_probe(x, lam)
        far = gn.boundary_decay_probe(x, lam, rhos=(9.0, 10.0))["max_abs"][-1]
        ok = r["super_polynomial"] and far < p["threshold"]
        return ok, {**r, "max_abs_rho10": far, "norm2": x.norm2()}, p["threshold"]
    if kind == "lambda0_ratio":
        T = _matrix(case, p["T"])
        spec = _spec(p)
        x1, x2 = gn.realize_moment(case, T)
        lam = 0 if case == "orthogonal" else (0, 0)
        star = gn.star_integral(x1, x2, lam, spec).total
        oracle = gn.lambda0_oracle(T, case, spec, p["weyl"])
        ratio = star / oracle
        expected = gn.expected_ratio(case)
        rel = abs(ratio - expected) / abs(expected)
        vals = {"star": star, "oracle": oracle, "ratio": ratio, "expected": expected,
                "rel_diff": rel, "ratio_over_expected": ratio / expected}
        return rel < p["tol"], vals, p["tol"]
    raise UsageError(f"unknown numeric check {kind!r}")


def execute_check(check):
    """Run one planned check; returns (status, values, tolerance, wall)."""
    t0 = time.perf_counter()
    try:
        if check["suite"] == "symbolic":
            ok, vals, tol = _run_symbolic(check["kind"], check["params"])
        else:
            ok, vals, tol = _run_numeric(check["kind"], check["params"])
        status = "pass" if ok else "fail"
    except UsageError:
        raise
    except Exception as e:  # a crash inside a check is a verification failure
        status, vals, tol = "fail", {"error": f"{type(e).__name__}: {e}"}, None
    return status, _strip_walls(_clean(vals)), tol, time.perf_counter() - t0


def _strip_walls(v):
    # nested timings would break byte-stability of the report
    if isinstance(v, dict):
        return {k: _strip_walls(a) for k, a in v.items() if k != "wall"}
    if isinstance(v, list):
        return [_strip_walls(a) for a in v]
    return v


def _hash(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


class Cache:
    """Content-addressed JSON files keyed by (check, version)."""

    def __init__(self, directory):
        self.dir = directory
        if directory:
            os.makedirs(directory, exist_ok=True)

    def key(self, check):
        return _hash({"check": {k: check[k] for k in ("suite", "kind", "params")},
                      "version": __version__})

    def get(self, check):
        if not self.dir:
            return None
        path = os.path.join(self.dir, self.key(check) + ".json")
        if os.path.exists(path):
            with open(path) as fh:
                return json.load(fh)
        return None

    def put(self, check, entry):
        if not self.dir:
            return
        path = os.path.join(self.dir, self.key(check) + ".json")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(entry, fh, sort_keys=True)
        os.replace(tmp, path)


def run_suite(cfg, report_path=None, log=None):
    """Execute the configured checks; returns the report dict."""
    log = log or (lambda msg: print(msg, file=sys.stderr))
    validate_config(cfg)
    checks = plan_checks(cfg)
    names = [c["name"] for c in checks]
    if len(set(names)) != len(names):
        raise UsageError("duplicate check names in plan")
    cache = Cache(cfg["suite"].get("cache") or "")
    started = time.time()
    results = [None] * len(checks)
    todo = []
    for i, c in enumerate(checks):
        hit = cache.get(c)
        if hit is not None:
            results[i] = (hit["status"], hit["values"], hit["tolerance"], 0.0, True)
        else:
            todo.append(i)
    jobs = int(cfg["suite"].get("jobs", 1))
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = {i: ex.submit(execute_check, checks[i]) for i in todo}
            for i in todo:
                results[i] = futs[i].result() + (False,)
    else:
        for i in todo:
            results[i] = execute_check(checks[i]) + (False,)
    for i in todo:
        status, vals, tol, _, _ = results[i]
        cache.put(checks[i], {"status": status, "values": vals, "tolerance": tol})
    entries, timing = [], {}
    for c, (status, vals, tol, wall, cached) in zip(checks, results):
        entries.append({"name": c["name"], "suite": c["suite"], "kind": c["kind"],
                        "params": _clean(c["params"]), "status": status, "tolerance": tol,
                        "values": vals})
        timing[c["name"]] = {"wall": wall, "cached": cached}
        if status != "pass":
            log(f"FAIL {c['name']}: {json.dumps(_brief(vals))}")
    cfg_clean = _clean(cfg)
    # where and how it ran does not change what was checked
    runtime = {k: cfg_clean["suite"].pop(k) for k in RUNTIME_KEYS if k in cfg_clean["suite"]}
    overall = "pass" if all(e["status"] == "pass" for e in entries) else "fail"
    report = {"schema": REPORT_SCHEMA, "version": __version__, "config_hash": _hash(cfg_clean),
              "seed": cfg["suite"]["seed"], "config": cfg_clean, "checks": entries,
              "summary": {"total": len(entries),
                          "passed": sum(e["status"] == "pass" for e in entries),
                          "failed": sum(e["status"] == "fail" for e in entries),
                          "skipped": sum(e["status"] == "skip" for e in entries)},
              "overall": overall,
              "timing": {"started": started, "finished": time.time(), "checks": timing,
                         "runtime": runtime}}
    if report_path:
        os.makedirs(os.path.dirname(os.path.abspath(report_path)), exist_ok=True)
        with open(report_path, "w") as fh:
            json.dump(report, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return report


def _brief(vals):
    keep = ("rel_diff", "max_residual", "max_rel_diff", "abs", "ratio_over_expected", "rates",
            "error", "difference", "properties")
    out = {k: vals[k] for k in keep if k in vals}
    if "relations" in vals:
        out["failed_relations"] = [r["params"] for r in vals["relations"] if not r["passed"]]
    if "difference" in out and isinstance(out["difference"], str) and len(out["difference"]) > 200:
        out["difference"] = out["difference"][:200] + "..."
    return out


# ---------------------------------------------------------------------------
# grids

GRID_HEADER = ["u", "v", "component", "value_re", "value_im"]


def emit_grid(what, params, out_path):
    case = params.get("case", "orthogonal")
    lam = _lam(case, params.get("lam", 0 if case == "orthogonal" else [0, 0]))
    n = int(params.get("n", 41))
    comp = int(params.get("component", 1))
    extent = float(params.get("extent", 0.95))
    if n < 0:
        raise UsageError("grid size must be nonnegative")
    rows = []
    if n > 0:
        if what == "green":
            rows = gn.green_grid(case, lam, _vector(case, params["x"]), n, extent, comp)
        elif what == "kernel":
            rows = gn.kernel_grid(case, lam, _vector(case, params["x1"]), _vector(case, params["x2"]),
                                  n, extent, comp, float(params.get("t", 1.0)))
        elif what == "integrand":
            rows = gn.integrand_grid(case, lam, _vector(case, params["x1"]),
                                     _vector(case, params["x2"]), n, extent, comp)
        else:
            raise UsageError(f"unknown grid {what!r}")
    elif what not in ("green", "kernel", "integrand"):
        raise UsageError(f"unknown grid {what!r}")
    try:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(GRID_HEADER)
            for a, b, c, re, im in rows:
                w.writerow([f"{a:.6f}", f"{b:.6f}", c, repr(float(re)), repr(float(im))])
    except OSError as e:
        raise OSError(f"cannot write grid to {out_path}: {e}") from e
    return out_path


# ---------------------------------------------------------------------------
# command line

def _run_parser():
    ap = argparse.ArgumentParser(prog="weilcheck", description="run the verification suites")
    ap.add_argument("config", nargs="?", help="TOML config file")
    ap.add_argument("--case", choices=["orthogonal", "unitary", "both"])
    ap.add_argument("--b", type=int, help="orthogonal weight cap (symbolic and numeric)")
    ap.add_argument("--bp", type=int, help="unitary b' cap")
    ap.add_argument("--bpp", type=int, help="unitary b'' cap")
    ap.add_argument("--tol", type=float, help="numeric tolerance for exchange and weight-0 ratios")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--cache", help="cache directory")
    ap.add_argument("--suite", choices=["symbolic", "numeric", "all"])
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--omega-variant", dest="omega_variant",
                    help="test hook: omega(L) variant (default|printed|flip_kinetic|flip_potential)")
    return ap


def _grid_parser():
    ap = argparse.ArgumentParser(prog="weilcheck grid", description="emit CSV grids")
    ap.add_argument("--what", required=True, choices=["green", "kernel", "integrand"])
    ap.add_argument("--case", default="orthogonal", choices=["orthogonal", "unitary"])
    ap.add_argument("--lam", default=None, help="b, or b',b''")
    ap.add_argument("--x", help="comma separated vector (green)")
    ap.add_argument("--x1")
    ap.add_argument("--x2")
    ap.add_argument("--n", type=int, default=41)
    ap.add_argument("--component", type=int, default=1)
    ap.add_argument("--extent", type=float, default=0.95)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--out", required=True)
    return ap


def apply_flags(cfg, a):
    s, sy, nu = cfg["suite"], cfg["symbolic"], cfg["numeric"]
    if a.case:
        s["cases"] = ["orthogonal", "unitary"] if a.case == "both" else [a.case]
    if a.b is not None:
        for key in ("orth_b_max", "genus2_orth_max", "properties_orth_max"):
            sy[key] = a.b
        sy["cohomology_orth_max"] = min(a.b, sy["cohomology_orth_max"])
        if a.b > SYMBOLIC_CAPS["orthogonal"]:
            sy["cohomology_orth_max"] = a.b
        nu["orth_lambda"] = [b for b in nu["orth_lambda"] if b <= a.b] or [0]
    if a.bp is not None or a.bpp is not None:
        bp = a.bp if a.bp is not None else sy["unit_b_max"][0]
        bpp = a.bpp if a.bpp is not None else sy["unit_b_max"][1]
        for key in ("unit_b_max", "genus2_unit_max", "properties_unit_max"):
            sy[key] = [bp, bpp]
        for key in ("invariance_max", "cohomology_unit_max"):
            sy[key] = [min(bp, sy[key][0]) if bp <= SYMBOLIC_CAPS["unitary"][0] else bp,
                       min(bpp, sy[key][1]) if bpp <= SYMBOLIC_CAPS["unitary"][1] else bpp]
        nu["unit_lambda"] = [l for l in nu["unit_lambda"] if l[0] <= bp and l[1] <= bpp] or [[0, 0]]
    if a.tol is not None:
        if a.tol <= 0:
            raise UsageError("--tol must be positive")
        nu["exchange_tol"] = nu["lambda0_tol"] = a.tol
    if a.seed is not None:
        s["seed"] = a.seed
    if a.out:
        s["out"] = a.out
    if a.cache is not None:
        s["cache"] = a.cache
    if a.suite:
        s["suite"] = a.suite
    if a.jobs is not None:
        s["jobs"] = a.jobs
    if a.omega_variant:
        sy["omega_variant"] = a.omega_variant
    return cfg


def _parse_vec(s, name):
    if s is None:
        raise UsageError(f"--{name} is required for this grid")
    return [a.strip() for a in s.split(",")]


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "grid":
            a = _grid_parser().parse_args(argv[1:])
            params = {"case": a.case, "n": a.n, "component": a.component, "extent": a.extent,
                      "t": a.t}
            if a.lam is not None:
                params["lam"] = (int(a.lam) if a.case == "orthogonal"
                                 else [int(v) for v in a.lam.split(",")])
            if a.what == "green":
                params["x"] = _parse_vec(a.x, "x")
            else:
                params["x1"], params["x2"] = _parse_vec(a.x1, "x1"), _parse_vec(a.x2, "x2")
            path = emit_grid(a.what, params, a.out)
            print(f"weilcheck grid: wrote {path}")
            return 0
        if argv and argv[0] == "run":
            argv = argv[1:]
        a = _run_parser().parse_args(argv)
        cfg = apply_flags(load_config(a.config), a)
        out = cfg["suite"]["out"]
        path = os.path.join(out, "report.json")
        rep = run_suite(cfg, path)
    except SystemExit as e:
        return 2 if e.code else 0
    except (UsageError, ValueError) as e:
        print(f"weilcheck: usage error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"weilcheck: {e}", file=sys.stderr)
        return 2
    sm = rep["summary"]
    failed = [c["name"] for c in rep["checks"] if c["status"] == "fail"]
    line = f"weilcheck: {sm['passed']}/{sm['total']} checks passed"
    if failed:
        line += f", {len(failed)} failed (first: {failed[0]})"
    print(line + f"; report {path}")
    return 0 if rep["overall"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
