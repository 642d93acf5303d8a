"""Knapp test functions: f_delta with f_delta^ = indicator of P_delta x [c, c + delta].

For a surface with volume exponent r the two sides of the (L^p, L^2)
restriction inequality scale as
    ||R f_delta||_2 ~ delta^{r/2},     ||f_delta||_p ~ delta^{(1 + r)/p'},
so the inequality can only hold uniformly when r/2 >= (1 + r)/p', i.e.
p <= p_star(r) = 2(r + 1)/(r + 2).
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from ._util import atomic_write_text
from .errors import DomainError, ValidationError
from .fitting import fit_power_law
from .polytope import Polytope
from .sublevel import box_halfwidths, build_P_delta, volume_polar_exact
from .surface import SurfacePatch, sphere_points

ADMISSIBLE_TOL = 0.02
SCALES = ("thickness", "side")


# ------------------------------------------------------------- exponents

def _num(x):
    return x if isinstance(x, Fraction) else float(x)


def p_star(r):
    """Largest p compatible with volume exponent r: 2(r + 1)/(r + 2)."""
    r = _num(r)
    if not r > 0:
        raise ValidationError("r must be positive")
    return 2 * (r + 1) / (r + 2)


def r_star(p):
    """Inverse of p_star: 2(p - 1)/(2 - p), for 1 < p < 2."""
    p = _num(p)
    if not 1 < p < 2:
        raise ValidationError("r_star needs 1 < p < 2")
    return 2 * (p - 1) / (2 - p)


def dual(p):
    p = _num(p)
    if not p > 1:
        raise ValidationError("dual exponent needs p > 1")
    return p / (p - 1)


def exponent_algebra(r=None, p=None) -> dict:
    """Counterpart of r (p_star, its dual) or of p (r_star, dual)."""
    if (r is None) == (p is None):
        raise ValidationError("give exactly one of r or p")
    if r is not None:
        ps = p_star(r)
        return {"r": r, "p_star": ps, "dual": dual(ps)}
    return {"p": p, "r_star": r_star(p), "dual": dual(p)}


# ------------------------------------------------------------- supports

@dataclass(frozen=True)
class KnappSupport:
    """Frequency support P x [slab_lo, slab_hi] of f_delta^."""
    P: Polytope
    slab_lo: float
    slab_hi: float
    delta: float
    is_box: bool

    @property
    def thickness(self) -> float:
        return self.slab_hi - self.slab_lo

    @property
    def volume(self) -> float:
        return self.thickness * self.P.volume

    @property
    def sides(self) -> np.ndarray:
        """Side lengths of the box support (tangential sides, then thickness)."""
        if not self.is_box:
            raise ValidationError("support is not a box")
        return np.r_[2 * box_halfwidths(self.P), self.thickness]


def _thickness(S: SurfacePatch, delta, scale):
    if scale == "thickness":
        return delta
    if scale == "side":
        a = set(S.weights.a)
        if len(a) != 1:
            raise ValidationError("side scaling needs equal weights a_1 = ... = a_{n-1}")
        return delta ** a.pop()
    raise ValidationError(f"scale must be one of {SCALES}")


def build_knapp_function(S: SurfacePatch, delta: float, margin: float = 1.1,
                         scale: str = "thickness") -> KnappSupport:
    """Support P_delta x [c, c + delta].

    With ``scale="side"`` (equal weights a only) ``delta`` is the tangential
    side scale and the slab has thickness delta^a, the classical Knapp box.
    """
    if not delta > 0:
        raise ValidationError("delta must be positive")
    th = _thickness(S, delta, scale)
    P = build_P_delta(S.Q, None, th, margin)
    if np.any(box_halfwidths(P) > S.halfwidth):
        raise DomainError(f"P_delta leaves K at delta = {delta}")
    return KnappSupport(P, S.c, S.c + th, float(delta), True)


# ---------------------------------------------------- restriction norm

def _orbit_limits(S: SurfacePatch, om, th, half):
    """Largest t with dilate(w, t) inside the sublevel set, P and K, per direction."""
    a = np.array(S.weights.a, dtype=float)
    lim = np.minimum(half, S.halfwidth)
    with np.errstate(divide="ignore"):
        t_box = np.min(np.where(np.abs(om) > 0, (lim / np.abs(om)) ** a, np.inf), axis=1)
    if S.R.is_zero:
        t_set = th / S.Q(om)
        return np.minimum(t_set, t_box)
    lo = np.zeros(len(om))
    hi = t_box.copy()
    inside = S.excess(om * hi[:, None] ** (1 / a)) <= th
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        ok = S.excess(om * mid[:, None] ** (1 / a)) <= th
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
        if np.all(hi - lo <= 1e-15 * hi):
            break
    return np.where(inside, t_box, lo)


def restriction_norm(S: SurfacePatch, support: KnappSupport, angular_nodes: int = 256,
                     epsrel: float = 1e-10) -> float:
    """sqrt of the surface measure of the cap {(y, Phi(y)) in support}.

    Integrated in dilation-polar coordinates y = dilate(w, t) with tau = t^r,
    where dy = (sum_j w_j^2 / a_j) / r dtau dsigma(w).
    """
    w = S.weights
    if support.P.d != w.d:
        raise ValidationError("support does not match the surface dimension")
    r = float(w.r_vol)
    a = np.array(w.a, dtype=float)
    if w.d == 1:
        om = np.array([[1.0], [-1.0]])
        wts = np.ones(2)
    elif w.d == 2:
        om = sphere_points(2, angular_nodes)
        wts = np.full(angular_nodes, 2 * np.pi / angular_nodes)
    else:
        raise ValidationError("restriction_norm supports n - 1 in {1, 2}")
    th = support.slab_hi - S.c
    if th <= 0:
        return 0.0
    t_max = _orbit_limits(S, om, th, box_halfwidths(support.P))
    tau_max = t_max ** r
    jac = (om ** 2 / a).sum(axis=1) / r

    def f(u):
        t = (u * tau_max) ** (1 / r)
        y = om * t[:, None] ** (1 / a)
        return S.measure_weight(y) * tau_max

    val, _ = integrate.quad_vec(f, 0.0, 1.0, epsrel=epsrel, epsabs=0.0)
    total = float(np.sum(wts * jac * val))
    if total <= 0:
        import logging
        logging.getLogger(__name__).warning("empty cap: restriction norm is 0")
        return 0.0
    return math.sqrt(total)


# ------------------------------------------------------------ L^p norm

@lru_cache(maxsize=64)
def sinc_kernel_norm(p: float, periods: int = 40, terms: int = 12) -> float:
    """c_p = int_R |2 sin(u/2) / u|^p du.

    Exact integrals over the first ``periods`` periods of sin(u/2); beyond that
    u^{-p} is expanded around each period midpoint and the sums over periods
    become Hurwitz zeta values.
    """
    p = float(p)
    if not p > 1:
        raise ValidationError("c_p diverges for p <= 1")
    head = 0.0
    for k in range(periods):
        v, _ = integrate.quad(lambda u: abs(2 * math.sin(u / 2) / u) ** p if u else 1.0,
                              2 * math.pi * k, 2 * math.pi * (k + 1), epsabs=0, epsrel=1e-13,
                              limit=200)
        head += v
    # with u = 2 pi (k + s): (2 pi)^{1-p} int_0^1 |2 sin(pi s)|^p (k + s)^{-p} ds
    tail = 0.0
    coef = 1.0  # binomial(-p, m)
    for m in range(0, terms, 2):
        if m:
            coef *= (p + m - 2) * (p + m - 1) / ((m - 1) * m)
        mu, _ = integrate.quad(lambda s: abs(2 * math.sin(math.pi * s)) ** p * (s - 0.5) ** m,
                               0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200)
        tail += coef * mu * special.zeta(p + m, periods + 0.5)
    tail *= (2 * math.pi) ** (1 - p)
    return 2.0 * (head + tail)


def lp_norm_knapp(support: KnappSupport, p: float, normalized: bool = True, **ft_kw) -> float:
    """||f||_p for f the inverse Fourier transform of the support indicator.

    Box supports factor into 1-D kernels: ||f||_p = (2 pi)^{-n} prod_j s_j^{1/p'} c_p^{1/p}.
    ``normalized=False`` drops the (2 pi)^{-n} of the inverse transform.
    """
    if not 1 < p < 2:
        raise ValidationError("lp_norm_knapp needs 1 < p < 2")
    pd = p / (p - 1)
    cp = sinc_kernel_norm(float(p))
    n = support.P.d + 1
    norm_const = (2 * math.pi) ** (-n) if normalized else 1.0
    if support.is_box:
        s = support.sides
        return norm_const * float(np.prod(s ** (1 / pd))) * cp ** (n / p)
    from .polytope_ft import lp_norm_ft
    tang = lp_norm_ft(support.P, p, **ft_kw).total
    return norm_const * tang * support.thickness ** (1 / pd) * cp ** (1 / p)


# -------------------------------------------------------------- fitting

@dataclass(frozen=True)
class KnappFamily:
    surface: SurfacePatch
    deltas: tuple
    p: float
    margin: float = 1.1
    scale: str = "thickness"

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.size < 5:
            raise ValidationError("a Knapp family needs at least 5 delta values")
        if not 1 < self.p < 2:
            raise ValidationError("Knapp families need 1 < p < 2")
        if np.any(np.diff(np.sort(d)[::-1]) >= 0):
            raise ValidationError("delta values must be distinct")
        object.__setattr__(self, "deltas", tuple(float(x) for x in d))


@dataclass(frozen=True)
class KnappRow:
    delta: float
    restriction_norm: float
    lp_norm: float
    p: float
    cap_ratio: float


@dataclass(frozen=True)
class ScalingVerdict:
    rho2: float
    rhop: float
    p: float
    admissible: bool
    r_hat: float
    p_bound: float
    rows: tuple = ()

    def as_dict(self):
        return {"rho2": self.rho2, "rhop": self.rhop, "p": self.p, "admissible": self.admissible,
                "r_hat": self.r_hat}


def knapp_rows(family: KnappFamily, threads: int = 1, p_list=None):
    S = family.surface
    ps = [family.p] if p_list is None else list(p_list)

    def job(dl):
        sup = build_knapp_function(S, dl, family.margin, family.scale)
        rn = restriction_norm(S, sup)
        ball = volume_polar_exact(S.Q, None, sup.thickness).value if S.R.is_zero else float("nan")
        return [KnappRow(dl, rn, lp_norm_knapp(sup, p), float(p), rn * rn / ball) for p in ps]

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(job, family.deltas))
    else:
        out = [job(dl) for dl in family.deltas]
    return out


def _scale_factor(family):
    return family.surface.weights.a[0] if family.scale == "side" else 1


def fit_knapp_exponents(family: KnappFamily, threads: int = 1) -> ScalingVerdict:
    """Fit rho_2 and rho_p; admissible iff rho_2 >= rho_p - 0.02."""
    rows = [r[0] for r in knapp_rows(family, threads)]
    d = [r.delta for r in rows]
    rho2 = fit_power_law(d, [r.restriction_norm for r in rows]).slope
    rhop = fit_power_law(d, [r.lp_norm for r in rows]).slope
    r_hat = 2 * rho2 / _scale_factor(family)
    return ScalingVerdict(rho2, rhop, family.p, bool(rho2 >= rhop - ADMISSIBLE_TOL), r_hat,
                          float(p_star(r_hat)), tuple(rows))


@dataclass(frozen=True)
class PScan:
    p_grid: tuple
    rho2: float
    rhop: tuple
    p_critical: float


def scan_critical_p(S: SurfacePatch, deltas, p_grid, margin: float = 1.1,
                    scale: str = "thickness", threads: int = 1) -> PScan:
    """Locate the p where the fitted rho_p crosses rho_2 (linear interpolation)."""
    p_grid = [float(p) for p in p_grid]
    fam = KnappFamily(S, tuple(deltas), p_grid[0], margin, scale)
    table = knapp_rows(fam, threads, p_grid)
    d = [row[0].delta for row in table]
    rho2 = fit_power_law(d, [row[0].restriction_norm for row in table]).slope
    rhop = [fit_power_law(d, [row[k].lp_norm for row in table]).slope for k in range(len(p_grid))]
    gap = np.array(rhop) - rho2
    crit = float("nan")
    for k in range(len(p_grid) - 1):
        if gap[k] <= 0 <= gap[k + 1] or gap[k] >= 0 >= gap[k + 1]:
            if gap[k + 1] == gap[k]:
                crit = p_grid[k]
            else:
                crit = p_grid[k] - gap[k] * (p_grid[k + 1] - p_grid[k]) / (gap[k + 1] - gap[k])
            break
    return PScan(tuple(p_grid), rho2, tuple(rhop), crit)


# --------------------------------------------------------------- output

def knapp_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["delta", "restriction_norm", "lp_norm", "p"])
    for r in rows:
        wr.writerow([repr(r.delta), repr(r.restriction_norm), repr(r.lp_norm), repr(r.p)])
    return buf.getvalue()


def write_knapp_csv(rows, path) -> None:
    atomic_write_text(path, knapp_csv(rows))


def write_verdict_json(verdict: ScalingVerdict, path) -> None:
    atomic_write_text(path, json.dumps(verdict.as_dict(), indent=2, sort_keys=True) + "\n")
