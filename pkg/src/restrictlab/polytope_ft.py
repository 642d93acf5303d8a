"""Fourier transforms of polytope indicators, chi_P^(xi) = int_P exp(-i<x, xi>) dx.

A d-simplex with vertices v_0..v_d has
    chi^(xi) = d! |D| (-i)^(-d) [t_0, ..., t_d] exp(-i t),   t_j = <v_j, xi>,
where [..] is the divided difference. Well separated nodes use the partial
fraction form; clustered nodes use a Taylor series about the node mean (or
the Newton recurrence when the spread is large enough to be stable).
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._pykernels import SERIES_SPREAD, SERIES_TERMS, THETA, dd1
from ._util import atomic_write_text, exact_sum, gauss_panels
from .errors import ResourceBudgetError, ValidationError
from .polytope import Polytope, Simplex

METHODS = ("auto", "partial_fraction", "series")


def _dd_partial(t):
    # t: (m+1, K) distinct nodes
    m = t.shape[0] - 1
    out = np.zeros(t.shape[1], dtype=complex)
    for j in range(m + 1):
        den = np.ones(t.shape[1])
        for k in range(m + 1):
            if k != j:
                den = den * (t[j] - t[k])
        out += np.exp(-1j * t[j]) / den
    return out


def _dd_series(t, terms=SERIES_TERMS):
    m = t.shape[0] - 1
    mu = t.mean(axis=0)
    s = t - mu
    h = np.ones_like(t)
    total = np.zeros(t.shape[1], dtype=complex)
    fact = float(math.factorial(m))
    for j in range(terms):
        if j > 0:
            h[0] = s[0] * h[0]
            for i in range(1, m + 1):
                h[i] = h[i - 1] + s[i] * h[i]
        total += (-1j) ** (m + j) / fact * h[m]
        fact *= m + j + 1
    return np.exp(-1j * mu) * total


def _dd_robust(t):
    # t sorted along axis 0
    m = t.shape[0] - 1
    if m == 0:
        return np.exp(-1j * t[0])
    if m == 1:
        return dd1(t[0], t[1])
    out = np.empty(t.shape[1], dtype=complex)
    spread = t[m] - t[0]
    small = spread < SERIES_SPREAD
    out[small] = _dd_series(t[:, small])
    big = ~small
    if big.any():
        tb = t[:, big]
        out[big] = (_dd_robust(tb[1:]) - _dd_robust(tb[:-1])) / spread[big]
    return out


def divided_difference_exp(t, method: str = "auto"):
    """[t_0, ..., t_m] exp(-i t) for nodes given as an (m+1, K) array."""
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}")
    t = np.sort(np.asarray(t, dtype=float), axis=0)
    if t.shape[0] == 1:
        return np.exp(-1j * t[0])
    if method == "partial_fraction":
        with np.errstate(divide="ignore", invalid="ignore"):
            return _dd_partial(t)
    if method == "series":
        return _dd_robust(t)
    sep = np.all(np.diff(t, axis=0) >= THETA, axis=0)
    out = np.empty(t.shape[1], dtype=complex)
    out[sep] = _dd_partial(t[:, sep])
    out[~sep] = _dd_robust(t[:, ~sep])
    return out


def _as_freqs(xi, d):
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1 and (d > 1 or xi.size == 1)
    xi = xi.reshape(-1, d)
    return xi, single


def simplex_ft(simplex: Simplex, xi, method: str = "auto"):
    """Exact int_D exp(-i<x, xi>) dx; ``xi`` is one frequency or an (K, d) array."""
    if not isinstance(simplex, Simplex):
        simplex = Simplex(simplex)
    d = simplex.d
    xi, single = _as_freqs(xi, d)
    t = simplex.vertices @ xi.T
    dd = divided_difference_exp(t, method)
    val = math.factorial(d) * simplex.volume * (-1j) ** (-d) * dd
    return complex(val[0]) if single else val


def polytope_ft(P: Polytope, xi, method: str = "auto", simplices=None):
    """Sum of simplex transforms over the decomposition of P (or ``simplices``)."""
    xi, single = _as_freqs(xi, P.d)
    if simplices is None and P.d == 2 and method == "auto":
        val = kernels.tri_ft(P.simplex_array(), xi)
    else:
        simplices = P.simplices() if simplices is None else simplices
        val = np.zeros(xi.shape[0], dtype=complex)
        for s in simplices:
            val += simplex_ft(s, xi, method)
    return complex(val[0]) if single else val


@dataclass(frozen=True)
class CovarianceReport:
    max_rel_error: float
    samples: int
    passed: bool


def check_affine_covariance(P: Polytope, T, xis, b=None, tol: float = 1e-10) -> CovarianceReport:
    """Compare chi^_{TP+b}(xi) with exp(-i<b, xi>) |det T| chi^_P(T^t xi)."""
    from .polytope import affine_image
    T = np.atleast_2d(np.asarray(T, dtype=float))
    b = np.zeros(P.d) if b is None else np.asarray(b, dtype=float)
    xis = np.asarray(xis, dtype=float).reshape(-1, P.d)
    TP = affine_image(P, T, b)
    lhs = polytope_ft(TP, xis)
    det = abs(np.linalg.det(T))
    base = polytope_ft(P, xis @ T)
    rhs = np.exp(-1j * (xis @ b)) * det * base
    err = np.abs(lhs - rhs) / (np.abs(base) * det + 1e-300)
    m = float(err.max())
    return CovarianceReport(m, len(xis), m < tol)


@dataclass(frozen=True)
class LpNormResult:
    p: float
    truncated: float
    tail_bound: float
    total: float
    Lambda: float
    nodes_per_axis: int

    def as_dict(self):
        return {"p": self.p, "truncated": self.truncated, "tail_bound": self.tail_bound,
                "total": self.total, "Lambda": self.Lambda, "nodes_per_axis": self.nodes_per_axis}


def _truncated_2d(tris, Lam, p, width, nodes_per_panel, threads):
    n_pan = int(math.ceil(2 * Lam / width))
    g, w = gauss_panels(-Lam, Lam, n_pan, nodes_per_panel)
    chunks = np.array_split(np.arange(g.size), max(1, threads * 4))
    job = lambda idx: kernels.tri_ft_abs_p(tris, g[idx], w[idx], g, w, p)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return exact_sum(np.concatenate(parts)), g.size


def edge_frames(P: Polytope):
    """(length, unit tangent, unit normal, midpoint) of every boundary edge of a polygon."""
    out = []
    for i, j in P.boundary_edges():
        e = P.vertices[j] - P.vertices[i]
        ln = float(np.hypot(*e))
        t = e / ln
        out.append((ln, t, np.array([t[1], -t[0]]), 0.5 * (P.vertices[i] + P.vertices[j])))
    return out


PAIR_MIN_PHASE = 64.0  # phase rate x |<m_1 - m_2, (1, s)>| needed to average a parallel pair
_TH, _WTH = np.polynomial.legendre.leggauss(24)
_TH = (_TH + 1) * np.pi / 2
_WTH = _WTH / 2


def _pair_mean_p(a, b, rest, p):
    """Mean over theta of (|a + b e^{i theta}| + rest)^p, by symmetry on [0, pi]."""
    acc = 0.0
    for th, w in zip(_TH, _WTH):
        mod = np.sqrt(np.maximum(a * a + b * b + 2 * a * b * math.cos(th), 0.0))
        acc = acc + w * (mod + rest) ** p
    return acc


def _vertex_mean_p(H, C, thr, p):
    """(sum over clusters of (sum |c_v|)^2)^{p/2}.

    Units whose phases H differ by less than ``thr`` form one cluster; H = inf
    marks an absent unit. H and C carry the unit index last. Where the cluster
    phases turn fast this bounds the local mean of |sum c_v e^{-iH_v}|^p by
    Jensen's inequality applied to the mean square.
    """
    order = np.argsort(H, axis=-1)
    H = np.take_along_axis(H, order, -1)
    A = np.abs(np.take_along_axis(C, order, -1))
    acc = np.zeros(H.shape[:-1])
    s2 = np.zeros(H.shape[:-1])
    k = H.shape[-1]
    with np.errstate(invalid="ignore"):
        gap = np.diff(H, axis=-1) >= thr
    for i in range(k):
        acc = acc + A[..., i]
        end = gap[..., i] if i + 1 < k else np.ones_like(acc, dtype=bool)
        s2 = s2 + np.where(end, acc * acc, 0.0)
        acc = np.where(end, 0.0, acc)
    return s2 ** (p / 2)


def edge_tail_bound(edges, Lam, p, nv=200, nz=40, na=64, u0=16 * np.pi):
    """Estimate of int_{|xi|_inf > Lam} |chi^_P|^p from a polygon's boundary edges.

    The divergence theorem gives |chi^_P(xi)| <= sum_e |<n_e, xi>| / |xi|^2 * |E_e(xi)|
    with |E_e| = |2 sin(u l/2) / u| <= min(l, 2/|u|), u = <t_e, xi>. The exterior of
    the square is split into four arms xi = x (1, s) (rotated), x = Lam e^v, and each
    s-interval is graded towards the directions where some edge has u = 0. Near
    such a direction the exact |E_e| is used for that edge; elsewhere the envelope.

    Away from u = 0 an edge term splits into two vertex terms +-<n_e, xi>/(u |xi|^2)
    e^{-i<v, xi>}, so chi^_P is a sum of units with fixed moduli and phases
    <v, xi>. Where distinct phases turn fast in x, the integrand is replaced by
    the mean-square estimate of ``_vertex_mean_p`` (never above the pointwise
    bound). A parallel pair of anchored edges is also offered its exact mean over
    the relative phase <m_1 - m_2, xi>. The result is therefore an asymptotically
    sharp estimate of the tail rather than a strict pointwise bound.
    """
    verts, ends = [], []
    for ln, t, _, m in edges:
        ids = []
        for q in (m - 0.5 * ln * t, m + 0.5 * ln * t):
            hit = [i for i, v in enumerate(verts) if np.allclose(v, q, atol=1e-12)]
            if not hit:
                verts.append(q)
                hit = [len(verts) - 1]
            ids.append(hit[0])
        ends.append(ids)
    verts = np.array(verts)
    vmax = 40.0 / (p - 1.0)
    vg, wv = np.polynomial.legendre.leggauss(nv)
    v = (vg + 1) / 2 * vmax
    wv = wv * vmax / 2
    zg, wzg = np.polynomial.legendre.leggauss(nz)
    ag, wag = np.polynomial.legendre.leggauss(na)
    lnx = math.log(Lam) + v
    X = np.exp(lnx)[:, None]
    total = []
    for rot in range(4):
        c, sn = math.cos(rot * math.pi / 2), math.sin(rot * math.pi / 2)
        R = np.array([[c, -sn], [sn, c]])
        fr = [(e[0], R.T @ e[1], R.T @ e[2], R.T @ e[3]) for e in edges]
        rv = verts @ R
        bps = {-1.0, 1.0}
        for _, _, nn, _ in fr:
            for sg in (1, -1):
                dv = sg * nn
                if dv[0] > 1e-15 and abs(dv[1] / dv[0]) < 1 - 1e-15:
                    bps.add(float(dv[1] / dv[0]))
        bps = sorted(bps)
        segs = []
        for a, b in zip(bps[:-1], bps[1:]):
            mid = 0.5 * (a + b)
            segs += [(a, 1.0, mid - a), (b, -1.0, b - mid)]
        for anchor, sg, L in segs:
            anch = [abs(e[1][0] + e[1][1] * anchor) < 1e-12 for e in fr]
            group = [k for k, an in enumerate(anch) if an]
            e0 = np.zeros(len(lnx))
            if group:
                ln, t = fr[group[0]][:2]
                e0 = np.minimum(u0 / ln / abs(t[1]), X[:, 0] * L)
            pair = group if len(group) == 2 else None
            dmid = fr[group[0]][3] - fr[group[1]][3] if pair else None

            def bound_p(em1):
                s = anchor + sg * em1 / X
                shape = np.broadcast(X, em1).shape
                terms, units, phases = [], [], []
                cv = np.zeros(shape + (len(verts),))
                for k, ((ln, t, nn, m), an) in enumerate(zip(fr, anch)):
                    au = 0.0 if an else t[0] + t[1] * anchor
                    u = X * au + sg * t[1] * em1
                    nd = (nn[0] + nn[1] * anchor + sg * nn[1] * em1 / X) / (1 + s * s)
                    env = np.minimum(ln, 2.0 / np.maximum(np.abs(u), 1e-300))
                    osc = np.abs(u) * ln > u0
                    if an:
                        env = np.where(osc, env, ln * np.abs(np.sinc(u * ln / (2 * np.pi))))
                        # a slowly turning edge enters as one unit at its midpoint phase
                        units.append(np.where(osc, 0.0, np.abs(nd) * env))
                        phases.append(np.where(osc, np.inf, X * (m[0] + m[1] * s)))
                    terms.append(np.abs(nd) * env)
                    c = np.where(osc, nd / np.where(osc, u, 1.0), 0.0)
                    cv[..., ends[k][0]] += c
                    cv[..., ends[k][1]] -= c
                full = sum(terms)
                out = full ** p
                if pair is not None:
                    a, b = terms[pair[0]], terms[pair[1]]
                    fast = X * np.abs(dmid[0] + dmid[1] * s) >= PAIR_MIN_PHASE
                    out = np.where(fast, _pair_mean_p(a, b, full - a - b, p), out)
                H = X[..., None] * (rv[:, 0] + rv[:, 1] * s[..., None])
                if units:
                    H = np.concatenate([H, np.stack(phases, -1)], -1)
                    cv = np.concatenate([cv, np.stack(units, -1)], -1)
                return np.minimum(out, _vertex_mean_p(H, cv, PAIR_MIN_PHASE, p))

            em = (ag[None, :] + 1) / 2 * e0[:, None]
            part_a = (bound_p(em) * wag[None, :] * e0[:, None] / 2).sum(axis=1)
            z0 = np.log1p(e0)
            zmax = np.log1p(X[:, 0] * L)
            z = z0[:, None] + (zg[None, :] + 1) / 2 * (zmax - z0)[:, None]
            wz = wzg[None, :] * (zmax - z0)[:, None] / 2
            part_b = (bound_p(np.expm1(z)) * np.exp(z) * wz).sum(axis=1)
            total.append(wv * (part_a + part_b) * np.exp((1 - p) * lnx))
    return exact_sum(np.concatenate(total))


def lp_norm_ft(P: Polytope, p: float, Lambda: float | None = None, lambda_factor: float = 80.0,
               nodes_per_panel: int = 8, max_nodes: int = 40000, threads: int = 1) -> LpNormResult:
    """||chi^_P||_p from quadrature over |xi|_inf <= Lambda plus an edge tail estimate.

    ``Lambda`` defaults to ``lambda_factor / inradius`` (at least 10 / inradius).
    """
    if not p > 1:
        raise ValidationError("p must exceed 1; the norm diverges for p <= 1")
    if P.d not in (1, 2):
        raise ValidationError("lp_norm_ft supports d in {1, 2}")
    rin = P.inradius()
    if Lambda is None:
        Lambda = lambda_factor / rin
    elif Lambda < 10.0 / rin - 1e-12:
        raise ValidationError(f"Lambda must be at least 10/inradius = {10.0 / rin:.6g}")
    ctr = P.centroid
    rc = float(np.max(np.linalg.norm(P.vertices - ctr, axis=1)))
    width = math.pi / (2.0 * rc)
    n_nodes = int(math.ceil(2 * Lambda / width)) * nodes_per_panel
    if n_nodes > max_nodes:
        raise ResourceBudgetError(f"{n_nodes} nodes per axis exceed the cap {max_nodes}", at=Lambda)
    if P.d == 1:
        length = float(P.vertices.max() - P.vertices.min())
        g, w = gauss_panels(-Lambda, Lambda, n_nodes // nodes_per_panel, nodes_per_panel)
        vals = np.abs(length * np.sinc(g * length / (2 * np.pi))) ** p
        trunc = exact_sum(w * vals)
        tail = 2.0 ** (p + 1) * Lambda ** (1 - p) / (p - 1)
    else:
        tris = P.simplex_array() - ctr
        trunc, n_nodes = _truncated_2d(tris, Lambda, p, width, nodes_per_panel, threads)
        tail = edge_tail_bound(edge_frames(P), Lambda, p)
    return LpNormResult(float(p), trunc ** (1 / p), float(tail), (trunc + tail) ** (1 / p),
                        float(Lambda), int(n_nodes))


@dataclass(frozen=True)
class BoundCheck:
    ratio: float
    norm: float
    n_simplices: int
    volume: float
    p: float


def knapp_norm_bound_check(P: Polytope, p: float, **kw) -> BoundCheck:
    """||chi^_P||_p / (N |P|^{1/p'}) with N the number of simplices."""
    res = lp_norm_ft(P, p, **kw)
    pd = p / (p - 1)
    n = P.n_simplices
    return BoundCheck(res.total / (n * P.volume ** (1 / pd)), res.total, n, P.volume, float(p))


@dataclass(frozen=True)
class FourierSample:
    xi: tuple
    value: complex


def sample_ft(P: Polytope, xis) -> list:
    xis = np.asarray(xis, dtype=float).reshape(-1, P.d)
    vals = polytope_ft(P, xis)
    return [FourierSample(tuple(map(float, x)), complex(v)) for x, v in zip(xis, vals)]


def fourier_csv(samples) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    d = len(samples[0].xi) if samples else 1
    wr.writerow([f"xi_{k + 1}" for k in range(d)] + ["re", "im"])
    for s in samples:
        wr.writerow([repr(x) for x in s.xi] + [repr(s.value.real), repr(s.value.imag)])
    return buf.getvalue()


def write_fourier_csv(samples, path) -> None:
    atomic_write_text(path, fourier_csv(samples))
