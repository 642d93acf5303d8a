"""Vertex-list polytopes and their simplex decompositions.

Polygons (d = 2) may be nonconvex and are split by ear clipping; for d >= 3
only convex polytopes are supported (cones from one vertex over the hull
facets that avoid it). In d = 1 a polytope is an interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_text
from .errors import DegenerateInputError, ValidationError

DEFAULT_N_MAX = 64


def _signed_volume(v):
    v = np.asarray(v, dtype=float)
    d = v.shape[1]
    return float(np.linalg.det((v[1:] - v[0]).T)) / math.factorial(d)


def _diameter(v):
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


@dataclass(frozen=True)
class Simplex:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValidationError("a d-simplex needs d+1 vertices in R^d")
        vol = _signed_volume(v)
        if abs(vol) <= 1e-14 * _diameter(v) ** v.shape[1]:
            raise DegenerateInputError("degenerate simplex (zero volume)")
        if vol < 0:
            if v.shape[1] == 1:
                v = v[::-1].copy()
            else:
                v[[1, 2]] = v[[2, 1]]
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        return _signed_volume(self.vertices)

    def contains(self, x, tol=0.0):
        """Barycentric membership for an (N, d) array; boundary within tol counts."""
        v = self.vertices
        lam = np.linalg.solve((v[1:] - v[0]).T, (np.asarray(x, dtype=float) - v[0]).T).T
        lam0 = 1.0 - lam.sum(axis=1)
        return (lam.min(axis=1) >= -tol) & (lam0 >= -tol)

    def interior_depth(self, x):
        """Smallest barycentric coordinate (positive inside, negative outside)."""
        v = self.vertices
        lam = np.linalg.solve((v[1:] - v[0]).T, (np.asarray(x, dtype=float) - v[0]).T).T
        return np.minimum(lam.min(axis=1), 1.0 - lam.sum(axis=1))


def _polygon_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def ear_clip(vertices) -> list:
    """Triangulate a simple polygon given in boundary order; returns index triples."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    area = _polygon_area(v)
    scale = max(_diameter(v), 1e-300) ** 2
    if abs(area) <= 1e-14 * scale:
        raise DegenerateInputError("polygon has zero area")
    idx = list(range(n)) if area > 0 else list(range(n))[::-1]
    eps = 1e-14 * scale
    tris = []
    while len(idx) > 3:
        m = len(idx)
        for k in range(m):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = v[i0], v[i1], v[i2]
            cr = _cross(a, b, c)
            if cr <= eps:
                if abs(cr) <= eps and m > 3:
                    # drop a collinear middle vertex; it adds no area
                    idx.pop(k)
                    break
                continue
            blocked = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = v[j]
                if _cross(a, b, p) >= -eps and _cross(b, c, p) >= -eps and _cross(c, a, p) >= -eps:
                    blocked = True
                    break
            if not blocked:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
        else:
            raise DegenerateInputError("ear clipping failed; polygon is not simple")
    tris.append(tuple(idx))
    return tris


def fan(n_vertices: int, apex: int = 0) -> list:
    """Fan triangulation of a convex polygon from vertex ``apex``."""
    order = [(apex + k) % n_vertices for k in range(n_vertices)]
    return [(order[0], order[k], order[k + 1]) for k in range(1, n_vertices - 1)]


@dataclass(frozen=True)
class Polytope:
    vertices: np.ndarray
    cells: tuple
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2:
            raise ValidationError("vertices must be an (N, d) array")
        if v.shape[0] > self.n_max:
            raise ValidationError(f"polytope has {v.shape[0]} vertices, above N_max = {self.n_max}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        cells = tuple(tuple(int(i) for i in c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise DegenerateInputError("polytope has no cells")
        if self.volume <= 0:
            raise DegenerateInputError("polytope has zero volume")

    @classmethod
    def from_vertices(cls, vertices, n_max: int = DEFAULT_N_MAX):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        d = v.shape[1]
        if v.shape[0] < d + 1:
            raise DegenerateInputError(f"need at least {d + 1} vertices in dimension {d}")
        if d == 1:
            lo, hi = int(np.argmin(v[:, 0])), int(np.argmax(v[:, 0]))
            if v[hi, 0] - v[lo, 0] <= 0:
                raise DegenerateInputError("interval has zero length")
            return cls(v, ((lo, hi),), n_max)
        if d == 2:
            return cls(v, tuple(ear_clip(v)), n_max)
        return cls(v, tuple(_convex_fan(v)), n_max)

    @classmethod
    def box(cls, lo, hi, n_max: int | None = None):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        d = lo.size
        if np.any(hi <= lo):
            raise DegenerateInputError("box has an empty side")
        if d == 2:
            v = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
            return cls(v, ((0, 1, 2), (0, 2, 3)), n_max or 4)
        corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij"))
        v = corners.reshape(d, -1).T
        if d == 1:
            return cls(v, ((0, 1),), n_max or 2)
        return cls(v, tuple(_convex_fan(v)), n_max or 2 ** d)

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_simplices(self) -> int:
        return len(self.cells)

    def simplex_array(self) -> np.ndarray:
        """(T, d+1, d) array of simplex vertices."""
        return self.vertices[np.array(self.cells)]

    def simplices(self) -> list:
        return [Simplex(s) for s in self.simplex_array()]

    @property
    def volume(self) -> float:
        return float(sum(abs(_signed_volume(s)) for s in self.simplex_array()))

    @property
    def centroid(self) -> np.ndarray:
        s = self.simplex_array()
        w = np.array([abs(_signed_volume(x)) for x in s])
        return (s.mean(axis=1) * w[:, None]).sum(axis=0) / w.sum()

    @property
    def diameter(self) -> float:
        return _diameter(self.vertices)

    def boundary_edges(self):
        """Edges (pairs of vertex indices) used by exactly one triangle (d = 2)."""
        if self.d != 2:
            raise ValidationError("boundary edges are defined for polygons")
        count = {}
        for c in self.cells:
            for a, b in ((c[0], c[1]), (c[1], c[2]), (c[2], c[0])):
                key = (min(a, b), max(a, b))
                count[key] = count.get(key, 0) + 1
        return [k for k, c in count.items() if c == 1]

    def inradius(self) -> float:
        """Radius of the largest inscribed ball (convex polygons exact; otherwise a lower estimate)."""
        if self.d == 1:
            return 0.5 * (self.vertices.max() - self.vertices.min())
        if self.d != 2:
            raise ValidationError("inradius is implemented for d <= 2")
        from scipy.optimize import linprog
        best = 0.0
        for tri in self.simplex_array():
            A, b = [], []
            for k in range(3):
                p, q, r = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
                e = q - p
                nrm = np.array([e[1], -e[0]]) / np.hypot(*e)
                if np.dot(nrm, r - p) > 0:
                    nrm = -nrm
                A.append([nrm[0], nrm[1], 1.0])
                b.append(float(np.dot(nrm, p)))
            res = linprog([0, 0, -1], A_ub=A, b_ub=b, bounds=[(None, None)] * 2 + [(0, None)])
            best = max(best, -res.fun)
        if len(self.cells) > 1 and self.is_convex():
            best = max(best, _convex_inradius(self.vertices))
        return float(best)

    def is_convex(self) -> bool:
        if self.d == 1:
            return True
        from scipy.spatial import ConvexHull
        return bool(abs(ConvexHull(self.vertices).volume - self.volume) <= 1e-10 * self.volume)


def _convex_inradius(v):
    from scipy.optimize import linprog
    from scipy.spatial import ConvexHull
    hull = ConvexHull(v)
    A = np.column_stack([hull.equations[:, :-1], np.ones(len(hull.equations))])
    b = -hull.equations[:, -1]
    d = v.shape[1]
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=A, b_ub=b, bounds=[(None, None)] * d + [(0, None)])
    return -res.fun


def _convex_fan(v):
    """Cones from vertex 0 over the hull facets that avoid it."""
    from scipy.spatial import ConvexHull
    hull = ConvexHull(v)
    if len(hull.vertices) != len(v):
        raise ValidationError("for d >= 3 all vertices must be extreme points of a convex polytope")
    return [(0,) + tuple(int(i) for i in f) for f in hull.simplices if 0 not in f]


def affine_image(P: Polytope, T, b=None) -> Polytope:
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape != (P.d, P.d):
        raise ValidationError(f"map must be {P.d}x{P.d}")
    det = float(np.linalg.det(T))
    if abs(det) <= 1e-14 * max(1.0, float(np.abs(T).max())) ** P.d:
        raise DegenerateInputError("singular linear map")
    b = np.zeros(P.d) if b is None else np.asarray(b, dtype=float)
    return Polytope(P.vertices @ T.T + b, P.cells, max(P.n_max, P.n_vertices))


def triangulate(P: Polytope, method: str = "stored", apex: int = 0) -> list:
    """Simplices of P. ``method="fan"`` re-fans a convex polygon from vertex ``apex``."""
    if method == "stored":
        return P.simplices()
    if method == "fan":
        if P.d != 2 or not P.is_convex():
            raise ValidationError("fan re-triangulation needs a convex polygon")
        from scipy.spatial import ConvexHull
        order = ConvexHull(P.vertices).vertices
        k = int(np.flatnonzero(order == apex)[0]) if apex in order else 0
        cells = [tuple(int(order[i]) for i in c) for c in fan(len(order), k)]
        return [Simplex(P.vertices[list(c)]) for c in cells]
    raise ValidationError(f"unknown triangulation method {method!r}")


def with_cells(P: Polytope, cells) -> Polytope:
    return Polytope(P.vertices, tuple(cells), P.n_max)


def check_disjoint(simplices, samples: int = 20000, seed: int = 0, tol: float = 1e-9) -> int:
    """Number of sample points lying strictly inside two or more simplices."""
    pts = np.concatenate([s.vertices for s in simplices])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    rng = np.random.Generator(np.random.Philox(seed))
    x = lo + (hi - lo) * rng.random((samples, pts.shape[1]))
    hits = np.zeros(samples, dtype=int)
    for s in simplices:
        hits += s.interior_depth(x) > tol
    return int(np.count_nonzero(hits > 1))


def read_vertex_file(path, n_max: int = DEFAULT_N_MAX) -> Polytope:
    """Parse ``d N`` followed by N lines of d coordinates."""
    lines = [ln.split("#")[0].strip() for ln in Path(path).read_text().splitlines()]
    rows = [(k + 1, ln) for k, ln in enumerate(lines) if ln]
    if not rows:
        raise ValidationError(f"{path}: empty vertex file")
    try:
        d, n = (int(t) for t in rows[0][1].split())
    except ValueError:
        raise ValidationError(f"{path}:{rows[0][0]}: header must be 'd N'") from None
    if len(rows) - 1 != n:
        raise ValidationError(f"{path}: header announces {n} vertices, found {len(rows) - 1}")
    v = []
    for lineno, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != d:
            raise ValidationError(f"{path}:{lineno}: expected {d} coordinates")
        try:
            v.append([float(t) for t in parts])
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad number") from None
    return Polytope.from_vertices(np.array(v), n_max=n_max)


def write_vertex_file(P: Polytope, path) -> None:
    out = [f"{P.d} {P.n_vertices}"]
    out += [" ".join(repr(float(c)) for c in row) for row in P.vertices]
    atomic_write_text(path, "\n".join(out) + "\n")


def regular_polygon(k: int, radius: float = 1.0) -> Polytope:
    t = 2 * np.pi * np.arange(k) / k
    return Polytope.from_vertices(radius * np.column_stack([np.cos(t), np.sin(t)]))


def random_convex_polygon(k: int, rng) -> Polytope:
    """Convex polygon with k vertices at sorted random angles on a jittered circle."""
    t = np.sort(rng.uniform(0, 2 * np.pi, k))
    r = rng.uniform(0.7, 1.3)
    v = np.column_stack([r * np.cos(t), rng.uniform(0.5, 1.5) * r * np.sin(t)])
    return Polytope.from_vertices(v)


UNIT_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
