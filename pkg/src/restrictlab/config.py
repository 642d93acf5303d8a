"""Strict JSON configuration for surfaces and experiments.

Unknown keys are rejected so that a misspelt grid parameter fails loudly
instead of silently falling back to a default.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .builtins import builtin_surface
from .errors import ValidationError
from .surface import (MixedHomogeneousPoly, Remainder, SurfacePatch, cubic_perturbation,
                      make_weights)

KINDS = ("volume-growth", "knapp", "polytope-norm", "decay", "scan", "hyperbola-demo",
         "triangle-report")

BUDGETS = {
    "small": {"mc_samples": 10 ** 6, "grid_cells": 1 << 18, "panels_1d": 4096,
              "panels_2d": 512, "ft_nodes": 8000},
    "default": {"mc_samples": 10 ** 7, "grid_cells": 1 << 22, "panels_1d": 16384,
                "panels_2d": 2048, "ft_nodes": 40000},
    "large": {"mc_samples": 10 ** 8, "grid_cells": 1 << 24, "panels_1d": 65536,
              "panels_2d": 8192, "ft_nodes": 160000},
}

SURFACE_KEYS = {"n", "weights", "monomials", "remainder", "offset", "domain_halfwidth", "cutoff"}

# experiment kind -> allowed keys and their defaults
DEFAULTS = {
    "volume-growth": {"surface": "parabola", "deltas": {"start": 0.25, "stop": 2.0 ** -12, "num": 11},
                      "samples": 10 ** 7, "resolution": None, "angular_nodes": 512},
    "knapp": {"surface": "parabola", "deltas": {"start": 2.0 ** -4, "stop": 2.0 ** -14, "num": 11},
              "p": None, "margin": 1.1, "scale": "thickness", "p_scan": None},
    "polytope-norm": {"polytope": "unit_triangle", "p": 4.0 / 3.0, "lambda_factor": 80.0,
                      "affine": None, "xi_samples": 100},
    "decay": {"surface": "parabola", "direction": None, "lambda_min": None, "lambda_max": None,
              "per_octave": 4, "refine": 1},
    "scan": {"surface": "parabola", "directions": 64, "lambda_probe": 256.0, "refine": 1},
    "hyperbola-demo": {"deltas": [1e-2, 1e-4, 1e-6, 1e-8], "k": 4},
    "triangle-report": {"surface": "mixed", "deltas": {"start": 0.25, "stop": 2.0 ** -12, "num": 11},
                        "samples": 10 ** 6, "lambda_min": None, "lambda_max": None,
                        "knapp_deltas": {"start": 2.0 ** -4, "stop": 2.0 ** -14, "num": 11}},
}
COMMON = {"experiment": None, "seed": None}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict
    seed: int = 0
    threads: int = 1
    budget: str = "default"
    source: str = "<defaults>"
    raw: dict = field(default_factory=dict)

    @property
    def caps(self) -> dict:
        return BUDGETS[self.budget]

    def canonical(self) -> str:
        body = {"kind": self.kind, "params": self.params, "seed": self.seed, "budget": self.budget}
        return json.dumps(body, sort_keys=True, default=_jsonable)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _err(src, key, msg):
    return ValidationError(f"{src}: key '{key}': {msg}")


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be an object")
    return data


def _number(src, key, v, lo=None, integer=False, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(src, key, "must be a number")
    if integer and int(v) != v:
        raise _err(src, key, "must be an integer")
    if not math.isfinite(v):
        raise _err(src, key, "must be finite")
    if positive and not v > 0:
        raise _err(src, key, "must be positive")
    if lo is not None and v < lo:
        raise _err(src, key, f"must be >= {lo}")
    return int(v) if integer else float(v)


def parse_surface(entry, src="surface") -> SurfacePatch:
    """A builtin name or an object with keys n, weights, monomials, ..."""
    if isinstance(entry, str):
        return builtin_surface(entry)
    if not isinstance(entry, dict):
        raise _err(src, "surface", "must be a builtin name or an object")
    unknown = set(entry) - SURFACE_KEYS
    if unknown:
        raise _err(src, sorted(unknown)[0], "unknown surface key")
    for req in ("n", "weights", "monomials"):
        if req not in entry:
            raise _err(src, req, "missing required key")
    n = _number(src, "n", entry["n"], lo=2, integer=True)
    a = entry["weights"]
    if not isinstance(a, list) or len(a) != n - 1:
        raise _err(src, "weights", f"must be a list of {n - 1} integers")
    for aj in a:
        _number(src, "weights", aj, lo=1, integer=True)
    w = make_weights([int(x) for x in a])
    mons = []
    for k, row in enumerate(entry["monomials"] if isinstance(entry["monomials"], list) else [None]):
        if not isinstance(row, list) or len(row) != n:
            raise _err(src, f"monomials[{k}]", f"must be [{n - 1} exponents..., coefficient]")
        exps = tuple(_number(src, f"monomials[{k}]", e, lo=0, integer=True) for e in row[:-1])
        mons.append((exps, _number(src, f"monomials[{k}]", row[-1])))
    try:
        Q = MixedHomogeneousPoly(w, tuple(mons))
    except ValidationError as exc:
        raise _err(src, "monomials", str(exc)) from None
    rem = entry.get("remainder", "none")
    if rem == "none":
        R = Remainder.zero()
    elif rem == "cubic_perturbation":
        R = cubic_perturbation(Q)
    else:
        raise _err(src, "remainder", "must be 'none' or 'cubic_perturbation'")
    offset = _number(src, "offset", entry.get("offset", 0.0))
    hw = _number(src, "domain_halfwidth", entry.get("domain_halfwidth", 1.0), positive=True)
    cut = entry.get("cutoff", [0.5, 0.9])
    if not isinstance(cut, list) or len(cut) != 2:
        raise _err(src, "cutoff", "must be [rho0, rho1]")
    cut = tuple(_number(src, "cutoff", c, lo=0.0) for c in cut)
    try:
        return SurfacePatch(Q, R, offset, hw, cut, name="custom")
    except ValidationError as exc:
        raise _err(src, "surface", str(exc)) from None


def parse_grid(src, key, entry, min_points=4) -> np.ndarray:
    """Geometric grid from {start, stop, num} or an explicit list."""
    if isinstance(entry, dict):
        extra = set(entry) - {"start", "stop", "num"}
        if extra or len(entry) != 3:
            raise _err(src, key, "grid object needs exactly start, stop, num")
        start = _number(src, key, entry["start"], positive=True)
        stop = _number(src, key, entry["stop"], positive=True)
        num = _number(src, key, entry["num"], integer=True)
        if num < min_points:
            raise _err(src, key, f"needs at least {min_points} points")
        return np.geomspace(start, stop, num)
    if not isinstance(entry, list):
        raise _err(src, key, "must be a grid object or a list")
    vals = np.array([_number(src, key, v, positive=True) for v in entry])
    if vals.size < min_points:
        raise _err(src, key, f"needs at least {min_points} points")
    ratios = vals[1:] / vals[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6) or ratios[0] == 1:
        raise _err(src, key, "points must form a geometric progression")
    return vals


def build_config(kind: str, data: dict | None = None, source: str = "<defaults>",
                 seed=None, threads: int = 1, budget: str = "default",
                 surface: str | None = None) -> ExperimentConfig:
    if kind not in KINDS:
        raise ValidationError(f"unknown experiment kind {kind!r}")
    if budget not in BUDGETS:
        raise ValidationError(f"unknown budget preset {budget!r}; choose from {sorted(BUDGETS)}")
    data = dict(data or {})
    allowed = set(DEFAULTS[kind]) | set(COMMON)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise _err(source, unknown[0], f"unknown key for experiment '{kind}'")
    if data.get("experiment", kind) != kind:
        raise _err(source, "experiment", f"config is for '{data['experiment']}', not '{kind}'")
    params = dict(DEFAULTS[kind])
    params.update({k: v for k, v in data.items() if k in DEFAULTS[kind]})
    if surface is not None and "surface" in params:
        params["surface"] = surface
    s = data.get("seed", 0) if seed is None else seed
    s = _number(source, "seed", s, lo=0, integer=True)
    if s >= 2 ** 64:
        raise _err(source, "seed", "must fit in 64 bits")
    if threads < 1:
        raise ValidationError("threads must be positive")
    _validate(kind, params, source)
    return ExperimentConfig(kind, params, s, threads, budget, source, data)


def _validate(kind, p, src):
    if "surface" in p:
        parse_surface(p["surface"], src)
    for key in ("deltas", "knapp_deltas"):
        if key in p:
            parse_grid(src, key, p[key], min_points=5 if kind == "knapp" or key == "knapp_deltas" else 4)
    for key in ("samples", "resolution", "angular_nodes", "directions", "k", "per_octave",
                "refine", "xi_samples"):
        if p.get(key) is not None:
            _number(src, key, p[key], lo=1, integer=True)
    for key in ("margin", "lambda_probe", "lambda_min", "lambda_max", "lambda_factor"):
        if p.get(key) is not None:
            _number(src, key, p[key], positive=True)
    if p.get("p") is not None:
        _number(src, "p", p["p"], positive=True)
    if kind == "knapp" and p.get("scale") not in ("thickness", "side"):
        raise _err(src, "scale", "must be 'thickness' or 'side'")
    if p.get("p_scan") is not None:
        ps = p["p_scan"]
        if not isinstance(ps, dict) or set(ps) != {"start", "stop", "num"}:
            raise _err(src, "p_scan", "must be {start, stop, num}")
        for k in ps:
            _number(src, "p_scan", ps[k], positive=True)
    if kind == "hyperbola-demo":
        if not isinstance(p["deltas"], list) or not p["deltas"]:
            raise _err(src, "deltas", "must be a non-empty list")
        for v in p["deltas"]:
            if not 0 < _number(src, "deltas", v) < 1:
                raise _err(src, "deltas", "values must lie in (0, 1)")
        if p["k"] < 2:
            raise _err(src, "k", "must be >= 2")


def load_config(kind: str, path=None, **kw) -> ExperimentConfig:
    data = load_json(path) if path is not None else {}
    return build_config(kind, data, str(path) if path else "<defaults>", **kw)
