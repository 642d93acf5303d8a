"""Sublevel-set volumes |{y in K : Phi(y) - c <= delta}| and covering boxes.

Three independent estimators are provided: counter-based Monte Carlo, a
deterministic grid bracket, and the exact polar formula for pure Q,
    |{Q <= delta}| = C_Q delta^{(n-1)/m},
    C_Q = 1/(n-1) int_{S^{n-2}} (sum_j (m/a_j) w_j^2) Q(w)^{-(n-1)/m} dsigma(w).
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import kernels
from ._util import atomic_write_text
from .errors import (ConstructionError, DegenerateInputError, ResourceBudgetError,
                     SingularIntegrandError, ValidationError)
from .fitting import ExponentFit, fit_power_law
from .polytope import Polytope
from .surface import MixedHomogeneousPoly, SurfacePatch, WeightSystem, dilate, sphere_points

MC_BLOCK = 1 << 18
MIN_MC_SAMPLES = 1000
GRID_CELL_CAP = 1 << 22
METHODS = ("monte_carlo", "grid_bracket", "polar_exact")


@dataclass(frozen=True)
class TangentBall:
    """Projected tangent ball {y in K : Phi(y) - c <= delta} at the origin chart."""
    surface: SurfacePatch
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValidationError("delta must be positive")

    def contains(self, y):
        y = np.asarray(y, dtype=float)
        return self.surface.in_domain(y) & (self.surface.excess(y) <= self.delta)


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    err_low: float
    err_high: float
    method: str
    samples: int
    seed: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if self.value < 0 or self.err_low < 0 or self.err_high < 0:
            raise ValidationError("volume and error bars must be non-negative")

    @property
    def lower(self) -> float:
        return self.value - self.err_low

    @property
    def upper(self) -> float:
        return self.value + self.err_high

    @property
    def err(self) -> float:
        return max(self.err_low, self.err_high)


def consistent(a: VolumeEstimate, b: VolumeEstimate, k: float = 3.0) -> bool:
    """|a - b| within k combined error bars."""
    return abs(a.value - b.value) <= k * (a.err + b.err)


# ---------------------------------------------------------------- windows

def axis_extents(Q: MixedHomogeneousPoly) -> np.ndarray:
    """Half-widths of the smallest axis box around {Q <= 1}.

    Every point of the unit level set is dilate(w, 1/Q(w)) for some unit w, so
    the extent along axis j is max_w |w_j| Q(w)^{-1/a_j}; the maximum over a
    sphere sample is polished by a local optimizer.
    """
    w = Q.weights
    om = sphere_points(w.d, 4096)
    q = Q(om)
    if not np.all(q > 0):
        raise ConstructionError("Q is not coercive: it vanishes on some ray")
    out = np.empty(w.d)
    for j in range(w.d):
        vals = np.abs(om[:, j]) * q ** (-1.0 / w.a[j])
        k = int(np.argmax(vals))
        if w.d == 1:
            out[j] = vals[k]
            continue
        if w.d == 2:
            phi0 = math.atan2(om[k, 1], om[k, 0])
            step = 4 * math.pi / len(om)

            def f(phi):
                u = np.array([[math.cos(phi), math.sin(phi)]])
                return -abs(u[0, j]) * Q(u)[0] ** (-1.0 / w.a[j])
            res = optimize.minimize_scalar(f, bounds=(phi0 - step, phi0 + step), method="bounded",
                                           options={"xatol": 1e-13})
            out[j] = max(vals[k], -res.fun)
        else:
            def f(x):
                u = x / np.linalg.norm(x)
                return -abs(u[j]) * Q(u[None, :])[0] ** (-1.0 / w.a[j])
            res = optimize.minimize(f, om[k], method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-15})
            out[j] = max(vals[k], -res.fun)
    return out


def _window(S: SurfacePatch, delta, window):
    """Sampling box (lo, hi) for the sublevel set."""
    hw = S.halfwidth
    full = (np.full(S.d, -hw), np.full(S.d, hw))
    if window == "domain" or (window == "auto" and not S.R.is_zero):
        return full
    if window != "auto":
        lo, hi = (np.asarray(b, dtype=float) for b in window)
        return np.maximum(lo, -hw), np.minimum(hi, hw)
    h = 1.02 * axis_extents(S.Q) * delta ** S.weights.inv
    return np.maximum(-h, -hw), np.minimum(h, hw)


# ------------------------------------------------------------- estimators

def _mc_block(seed, b, n, lo, hi, poly, S, delta):
    rng = np.random.Generator(np.random.Philox(key=seed, counter=b << 128))
    y = lo + (hi - lo) * rng.random((n, lo.size))
    if poly is not None:
        return kernels.count_le(y, poly[0], poly[1], delta)
    return int(np.count_nonzero(S.excess(y) <= delta))


def volume_mc(S: SurfacePatch, delta: float, N: int, seed: int = 0, window="auto",
              threads: int = 1) -> VolumeEstimate:
    """Monte Carlo volume with stderr sqrt(p(1-p)/N) |box|.

    Sample block b is drawn from Philox(key=seed, counter=b * 2^128), so the
    estimate depends only on (seed, N) and not on the thread count.
    """
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if N < MIN_MC_SAMPLES:
        raise ValidationError(f"Monte Carlo needs N >= {MIN_MC_SAMPLES}")
    lo, hi = _window(S, delta, window)
    vol_box = float(np.prod(hi - lo))
    poly = S.phi_poly()
    sizes = [min(MC_BLOCK, N - s) for s in range(0, N, MC_BLOCK)]
    job = lambda b: _mc_block(seed, b, sizes[b], lo, hi, poly, S, delta)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            hits = sum(ex.map(job, range(len(sizes))))
    else:
        hits = sum(job(b) for b in range(len(sizes)))
    ph = hits / N
    err = math.sqrt(ph * (1 - ph) / N) * vol_box
    return VolumeEstimate(ph * vol_box, err, err, "monte_carlo", N, seed)


def volume_grid(S: SurfacePatch, delta: float, resolution: int, window="auto") -> VolumeEstimate:
    """Deterministic bracket from corner tests on a resolution^d cell grid.

    Lower count: cells with every corner in the set; upper count: cells with
    some corner in it. A cell crossed by the set without a corner inside is
    missed by both (tangential crossing caveat).
    """
    if resolution < 16:
        raise ValidationError("resolution must be at least 16")
    if S.d not in (1, 2):
        raise ValidationError("grid bracketing supports n - 1 in {1, 2}")
    if resolution ** S.d > GRID_CELL_CAP:
        raise ResourceBudgetError(f"{resolution}^{S.d} cells exceed the cap 2^22")
    lo, hi = _window(S, delta, window)
    cell = float(np.prod((hi - lo) / resolution))
    poly = S.phi_poly()
    if poly is not None:
        n_all, n_any = kernels.grid_bracket(lo, hi, resolution, poly[0], poly[1], delta)
    else:
        axes = [lo[j] + (hi[j] - lo[j]) * np.arange(resolution + 1) / resolution for j in range(S.d)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, S.d)
        ok = (S.excess(pts) <= delta).reshape((resolution + 1,) * S.d)
        if S.d == 1:
            cnt = ok[1:].astype(int) + ok[:-1]
            full = 2
        else:
            cnt = ok[1:, 1:].astype(int) + ok[1:, :-1] + ok[:-1, 1:] + ok[:-1, :-1]
            full = 4
        n_all, n_any = int(np.count_nonzero(cnt == full)), int(np.count_nonzero(cnt > 0))
    low, up = n_all * cell, n_any * cell
    mid = 0.5 * (low + up)
    return VolumeEstimate(mid, mid - low, up - mid, "grid_bracket", resolution ** S.d)


def polar_constant(Q: MixedHomogeneousPoly, angular_nodes: int = 512) -> float:
    w = Q.weights
    r = float(w.r_vol)
    m = float(w.m)
    if w.d == 1:
        om = np.array([[1.0], [-1.0]])
        q = Q(om)
        if np.any(q <= 0):
            raise SingularIntegrandError("Q vanishes on the unit sphere")
        return float(np.sum(q ** -r))
    if w.d == 2:
        phi = 2 * np.pi * np.arange(angular_nodes) / angular_nodes
        om = np.column_stack([np.cos(phi), np.sin(phi)])
        wts = np.full(angular_nodes, 2 * np.pi / angular_nodes)
    elif w.d == 3:
        ct, wc = np.polynomial.legendre.leggauss(angular_nodes // 2)
        nphi = angular_nodes
        phi = 2 * np.pi * np.arange(nphi) / nphi
        st = np.sqrt(1 - ct ** 2)
        om = np.column_stack([np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel(),
                              np.repeat(ct, nphi)])
        wts = np.repeat(wc, nphi) * (2 * np.pi / nphi)
    else:
        raise ValidationError("polar quadrature is implemented for n - 1 <= 3")
    q = Q(om)
    if np.any(q <= 0):
        raise SingularIntegrandError("Q vanishes on the unit sphere")
    jac = (om ** 2 * (m / np.array(w.a, dtype=float))).sum(axis=1)
    return float(np.sum(wts * jac * q ** -r) / w.d)


def volume_polar_exact(Q: MixedHomogeneousPoly, w: WeightSystem | None, delta: float,
                       angular_nodes: int = 512) -> VolumeEstimate:
    """C_Q delta^{(n-1)/m}; the error bar is the change from halving the angular rule."""
    if w is not None and w != Q.weights:
        raise ValidationError("weights do not match Q")
    if not delta > 0:
        raise ValidationError("delta must be positive")
    c = polar_constant(Q, angular_nodes)
    c_half = polar_constant(Q, max(angular_nodes // 2, 8)) if Q.d > 1 else c
    scale = delta ** float(Q.weights.r_vol)
    err = abs(c - c_half) * scale + 4 * np.finfo(float).eps * c * scale
    return VolumeEstimate(c * scale, err, err, "polar_exact", angular_nodes)


def fit_growth_exponent(volumes) -> ExponentFit:
    """Slope of log V against log delta for a list of (delta, VolumeEstimate)."""
    d = [float(x) for x, _ in volumes]
    v = [e.value if isinstance(e, VolumeEstimate) else float(e) for _, e in volumes]
    if any(x <= 0 for x in v):
        raise ValidationError("volumes must be positive for a log-log fit")
    return fit_power_law(d, v)


# ---------------------------------------------------------- covering boxes

def build_P_delta(Q: MixedHomogeneousPoly, w: WeightSystem | None, delta: float,
                  margin: float = 1.1) -> Polytope:
    """Box prod_j [-h_j delta^{1/a_j}, h_j delta^{1/a_j}], h_j = margin * extent_j."""
    if w is not None and w != Q.weights:
        raise ValidationError("weights do not match Q")
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if not margin > 0:
        raise ValidationError("margin must be positive")
    h = margin * axis_extents(Q) * delta ** Q.weights.inv
    return Polytope.box(-h, h)


def box_halfwidths(P: Polytope) -> np.ndarray:
    return 0.5 * (P.vertices.max(axis=0) - P.vertices.min(axis=0))


@dataclass(frozen=True)
class ContainmentReport:
    violations: int
    accepted: int
    ratio: float
    ratio_err: float
    passed: bool


def check_containment(ball: TangentBall, P: Polytope, samples: int = 100_000, seed: int = 0,
                      C2: float = 4.0) -> ContainmentReport:
    """Rejection-sample the tangent ball; count points outside P and estimate |P|/|B|.

    Sampling happens in dilation-normalised coordinates z (y = dilate(z, delta)),
    inside a box grown until no accepted point lies in its outer 10% shell.
    """
    S, delta = ball.surface, ball.delta
    if P.d != S.d:
        raise ValidationError("dimension mismatch between ball and polytope")
    w = S.weights
    scale = delta ** w.inv
    lo_p, hi_p = P.vertices.min(axis=0), P.vertices.max(axis=0)
    box_is_axis = P.n_vertices == 2 ** P.d
    half = np.ones(S.d)
    rng = np.random.Generator(np.random.Philox(key=seed))
    for _ in range(60):
        n_draw = max(samples, 1000)
        z = rng.uniform(-1, 1, (n_draw, S.d)) * half
        y = z * scale
        inside = ball.contains(y)
        acc = int(np.count_nonzero(inside))
        if acc and np.any(np.abs(z[inside]) > 0.9 * half):
            half *= 2.0
            continue
        if acc:
            break
        half *= 0.5
    else:
        raise DegenerateInputError("could not bracket the sublevel set")
    if acc == 0:
        raise DegenerateInputError("sublevel set is empty")
    # top up so that `samples` accepted points are tested
    ys = [y[inside]]
    drawn = n_draw
    while sum(len(a) for a in ys) < samples and drawn < 200 * samples:
        z = rng.uniform(-1, 1, (samples, S.d)) * half
        y = z * scale
        ok = ball.contains(y)
        ys.append(y[ok])
        drawn += samples
    pts = np.concatenate(ys)
    acc = len(pts)
    if box_is_axis:
        outside = np.any((pts < lo_p) | (pts > hi_p), axis=1)
    else:
        inside_any = np.zeros(acc, dtype=bool)
        for s in P.simplices():
            inside_any |= s.contains(pts, tol=1e-12)
        outside = ~inside_any
    viol = int(np.count_nonzero(outside))
    box_vol = float(np.prod(2 * half * scale))
    frac = acc / drawn
    vol_b = frac * box_vol
    ratio = P.volume / vol_b
    ratio_err = ratio * math.sqrt((1 - frac) / max(acc, 1))
    return ContainmentReport(viol, acc, ratio, ratio_err, viol == 0 and 1.0 <= ratio <= C2)


# ------------------------------------------------------------ saddle demo

def hyperbola_region_area(delta: float) -> float:
    """Area of {|x1 x2| <= delta} in [-1, 1]^2."""
    return 4.0 * delta * (1.0 + math.log(1.0 / delta))


def staircase_area(delta: float, k: int, breaks=None) -> float:
    """Area of the k-step cover of the quadrant piece, times 4.

    The cover is [0, x_0] x [0, 1] plus [x_{i-1}, x_i] x [0, delta / x_{i-1}]
    with x_0 = delta and x_k = 1; ``breaks`` are x_1..x_{k-1}.
    """
    if breaks is None:
        return 4.0 * (delta + k * delta * (delta ** (-1.0 / k) - 1.0))
    x = np.concatenate([[delta], np.asarray(breaks, dtype=float), [1.0]])
    return 4.0 * (delta + float(np.sum((x[1:] - x[:-1]) * delta / x[:-1])))


def optimal_breaks(delta: float, k: int) -> np.ndarray:
    """Geometric breakpoints x_i = delta^{1 - i/k}, i = 1..k-1."""
    return delta ** (1.0 - np.arange(1, k) / k)


def _numeric_staircase(delta, k):
    ld = math.log(delta)

    def f(u):
        x = np.concatenate([[ld], u, [0.0]])
        return delta * (1 + np.sum(np.expm1(np.diff(x))))

    def g(u):
        x = np.concatenate([[ld], u, [0.0]])
        e = np.exp(np.diff(x))
        return delta * (e[:-1] - e[1:])
    u0 = np.linspace(ld, 0.0, k + 1)[1:-1] + 0.1 * np.sin(np.arange(1, k))
    res = optimize.minimize(f, u0, jac=g, method="BFGS", options={"gtol": 1e-14 * delta})
    return 4.0 * float(res.fun)


def hyperbola_demo(deltas, k: int = 4):
    """Rows comparing the best k-step staircase cover with the region {|x1 x2| <= delta}."""
    if k < 2:
        raise ValidationError("k must be at least 2")
    rows = []
    for dl in deltas:
        dl = float(dl)
        if not 0 < dl < 1:
            raise ValidationError("delta must lie in (0, 1)")
        area = hyperbola_region_area(dl)
        quad, _ = integrate.quad(lambda x: min(1.0, dl / x), 0.0, 1.0, points=[dl],
                                 epsabs=0, epsrel=1e-13, limit=200)
        cover = staircase_area(dl, k)
        rows.append({"delta": dl, "k": k, "region_area": area, "region_area_quad": 4 * quad,
                     "cover_area": cover, "cover_area_numeric": _numeric_staircase(dl, k),
                     "ratio": cover / area})
    return rows


# ---------------------------------------------------------------- output

def volume_csv(rows) -> str:
    """Rows of (delta, VolumeEstimate) as CSV."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["delta", "volume", "err_low", "err_high", "method", "seed"])
    for dl, e in rows:
        wr.writerow([repr(float(dl)), repr(e.value), repr(e.err_low), repr(e.err_high), e.method,
                     "" if e.seed is None else e.seed])
    return buf.getvalue()


def write_volume_csv(rows, path) -> None:
    atomic_write_text(path, volume_csv(rows))


def write_fit_json(fit: ExponentFit, path, extra=None) -> None:
    d = fit.as_dict()
    if extra:
        d.update(extra)
    atomic_write_text(path, json.dumps(d, indent=2, sort_keys=True) + "\n")
