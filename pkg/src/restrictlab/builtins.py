"""Registry of named model surfaces."""
from __future__ import annotations

from fractions import Fraction

from .errors import ValidationError
from .surface import (MixedHomogeneousPoly, Remainder, SurfacePatch, cubic_perturbation,
                      make_weights)

# name -> (weights, monomials, description)
_TABLE = {
    "parabola": ((2,), [((2,), 1.0)], "x^2"),
    "quartic_curve": ((4,), [((4,), 1.0)], "x^4"),
    "paraboloid": ((2, 2), [((2, 0), 1.0), ((0, 2), 1.0)], "x1^2 + x2^2"),
    "mixed": ((2, 4), [((2, 0), 1.0), ((0, 4), 1.0)], "x1^2 + x2^4"),
    "quartic_quartic": ((4, 4), [((4, 0), 1.0), ((0, 4), 1.0)], "x1^4 + x2^4"),
}
# The saddle has no positive mixed-homogeneous model and no bounded-vertex
# polyhedral cover; it is listed for the staircase demo only.
SADDLE = {"name": "saddle", "weights": None, "formula": "x1*x2", "flag": "no-fpt"}

ALIASES = {"quartic": "quartic_curve", "quartic-curve": "quartic_curve",
           "quartic-quartic": "quartic_quartic"}


def builtin_names():
    return list(_TABLE)


def resolve_name(name: str) -> str:
    key = ALIASES.get(name, name)
    if key == "saddle":
        raise ValidationError("saddle x1*x2 is demo-only (no-fpt); use the hyperbola-demo experiment")
    if key not in _TABLE:
        raise ValidationError(f"unknown builtin surface {name!r}; choose from {builtin_names()}")
    return key


def builtin_poly(name: str) -> MixedHomogeneousPoly:
    a, mons, _ = _TABLE[resolve_name(name)]
    return MixedHomogeneousPoly(make_weights(a), tuple(mons))


def builtin_surface(name: str, remainder: str = "none", offset: float = 0.0,
                    halfwidth: float = 1.0, cutoff=(0.5, 0.9)) -> SurfacePatch:
    key = resolve_name(name)
    Q = builtin_poly(key)
    if remainder == "none":
        R = Remainder.zero()
    elif remainder == "cubic_perturbation":
        R = cubic_perturbation(Q)
    else:
        raise ValidationError(f"unknown remainder {remainder!r}")
    return SurfacePatch(Q, R, offset, halfwidth, cutoff, name=key)


def list_builtins():
    """Rows of dicts: name, n, weights, formula, predicted r = (n-1)/m, flag."""
    rows = []
    for name, (a, _, formula) in _TABLE.items():
        w = make_weights(a)
        rows.append({"name": name, "n": w.n, "weights": list(a), "formula": formula,
                     "m": w.m, "r": w.r_vol, "flag": ""})
    rows.append({"name": "saddle", "n": 3, "weights": None, "formula": SADDLE["formula"],
                 "m": None, "r": Fraction(1), "flag": "no-fpt"})
    return rows
