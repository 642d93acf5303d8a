"""Model hypersurfaces x_n = Q(x') + R(x') + c over a box around the origin.

Q is a mixed-homogeneous polynomial: with integer weights a_1..a_{n-1},
Q(t^{1/a_1} x_1, ..., t^{1/a_{n-1}} x_{n-1}) = t Q(x). The weights fix the
homogeneity degree m through (n-1)/m = sum_j 1/a_j, and (n-1)/m is the
predicted volume-growth / decay exponent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, ValidationError

log = logging.getLogger(__name__)

SPHERE_SAMPLES = 1024


@dataclass(frozen=True)
class WeightSystem:
    a: tuple

    def __post_init__(self):
        a = tuple(self.a)
        if not a:
            raise ValidationError("weights must be a non-empty list")
        for aj in a:
            if isinstance(aj, bool) or int(aj) != aj or aj < 1:
                raise ValidationError(f"weights must be integers >= 1, got {aj!r}")
        object.__setattr__(self, "a", tuple(int(aj) for aj in a))

    @property
    def d(self) -> int:
        """Number of free variables, n - 1."""
        return len(self.a)

    @property
    def n(self) -> int:
        return len(self.a) + 1

    @property
    def r_vol(self) -> Fraction:
        return sum((Fraction(1, aj) for aj in self.a), Fraction(0))

    @property
    def m(self) -> Fraction:
        return Fraction(self.d) / self.r_vol

    @property
    def inv(self) -> np.ndarray:
        return np.array([1.0 / aj for aj in self.a])


def make_weights(a: Sequence[int]) -> WeightSystem:
    return WeightSystem(tuple(a))


def dilate(x, t, w: WeightSystem):
    """Anisotropic dilation (t^{1/a_1} x_1, ..., t^{1/a_d} x_d); works on (..., d) arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("dilation scale must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.d:
        raise ValidationError(f"point has {x.shape[-1]} coordinates, weights need {w.d}")
    return x * np.power(t[..., None], w.inv)


def sphere_points(d: int, count: int = SPHERE_SAMPLES) -> np.ndarray:
    """Deterministic, roughly uniform points on S^{d-1}."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        phi = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if d == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5 ** 0.5) * k
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    g = np.random.default_rng(12345).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class MixedHomogeneousPoly:
    weights: WeightSystem
    monomials: tuple

    def __post_init__(self):
        w = self.weights
        mons = []
        for item in self.monomials:
            exps, coef = item
            exps = tuple(exps)
            if len(exps) != w.d:
                raise ValidationError(f"monomial {exps} has wrong length for {w.d} variables")
            if any(int(e) != e or e < 0 for e in exps):
                raise ValidationError(f"monomial exponents must be non-negative integers: {exps}")
            exps = tuple(int(e) for e in exps)
            deg = sum((Fraction(e, aj) for e, aj in zip(exps, w.a)), Fraction(0))
            if deg != 1:
                raise ValidationError(
                    f"monomial {exps} has weighted degree {deg} != 1 for weights {w.a}")
            if float(coef) != 0.0:
                mons.append((exps, float(coef)))
        if not mons:
            raise ValidationError("Q is identically zero")
        object.__setattr__(self, "monomials", tuple(mons))
        vals = self(sphere_points(w.d))
        if not np.all(vals > 0):
            raise ValidationError("Q must be positive away from the origin "
                                  f"(min on sphere sample {vals.min():.3g})")

    @property
    def d(self) -> int:
        return self.weights.d

    @property
    def exps(self) -> np.ndarray:
        return np.array([e for e, _ in self.monomials], dtype=np.int64).reshape(-1, self.d)

    @property
    def coefs(self) -> np.ndarray:
        return np.array([c for _, c in self.monomials])

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, self.d)
        return kernels.poly_eval(flat, self.exps, self.coefs).reshape(y.shape[:-1])

    def value_and_grad(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.reshape(-1, self.d)
        v, g = kernels.poly_eval_grad(flat, self.exps, self.coefs)
        return v.reshape(y.shape[:-1]), g.reshape(y.shape)


@dataclass(frozen=True)
class HomogeneityReport:
    max_rel_error: float
    samples: int
    passed: bool


def check_mixed_homogeneity(Q: MixedHomogeneousPoly, samples: int = 1000, seed: int = 0,
                            tol: float = 1e-10) -> HomogeneityReport:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (samples, Q.d))
    t = 10.0 ** rng.uniform(-4, 4, samples)
    lhs = Q(dilate(x, t, Q.weights))
    rhs = t * Q(x)
    err = float(np.max(np.abs(lhs - rhs) / (np.abs(rhs) + 1e-300)))
    return HomogeneityReport(err, samples, err < tol)


@dataclass(frozen=True)
class Remainder:
    """Smooth perturbation R with R(dilate(x, t)) / t -> 0 as t -> 0.

    ``monomials`` is set for polynomial remainders so the compiled kernels can
    evaluate Q + R in one pass; ``func``/``grad`` serve arbitrary callables.
    """
    name: str
    func: Optional[Callable] = None
    grad: Optional[Callable] = None
    monomials: Optional[tuple] = None

    @classmethod
    def zero(cls):
        return cls("none", monomials=())

    @classmethod
    def polynomial(cls, monomials, name="polynomial"):
        return cls(name, monomials=tuple((tuple(int(e) for e in ex), float(c))
                                         for ex, c in monomials))

    @property
    def is_zero(self) -> bool:
        return self.func is None and not self.monomials

    def _poly(self, d):
        e = np.array([m[0] for m in self.monomials], dtype=np.int64).reshape(-1, d)
        c = np.array([m[1] for m in self.monomials])
        return e, c

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        d = y.shape[-1]
        if self.func is not None:
            return np.asarray(self.func(y), dtype=float)
        if not self.monomials:
            return np.zeros(y.shape[:-1])
        e, c = self._poly(d)
        return kernels.poly_eval(y.reshape(-1, d), e, c).reshape(y.shape[:-1])

    def gradient(self, y, step=1e-6):
        y = np.asarray(y, dtype=float)
        d = y.shape[-1]
        if self.func is None:
            if not self.monomials:
                return np.zeros(y.shape)
            e, c = self._poly(d)
            return kernels.poly_eval_grad(y.reshape(-1, d), e, c)[1].reshape(y.shape)
        if self.grad is not None:
            return np.asarray(self.grad(y), dtype=float)
        g = np.empty(y.shape)
        for j in range(d):
            h = np.zeros(d)
            h[j] = step
            g[..., j] = (self.func(y + h) - self.func(y - h)) / (2 * step)
        return g

    def certificate(self, weights: WeightSystem, t_grid=None):
        """Rows (t, max over sphere of |R(dilate(w, t))| / t)."""
        if t_grid is None:
            t_grid = 10.0 ** -np.arange(0, 7)
        om = sphere_points(weights.d, 256)
        rows = []
        for t in t_grid:
            vals = np.abs(self(dilate(om, np.full(len(om), t), weights))) / t
            rows.append((float(t), float(vals.max())))
        return rows


def certificate_ok(rows) -> bool:
    first, last = rows[0][1], rows[-1][1]
    if first == 0.0:
        return last == 0.0
    return last < 0.1 * first


def cubic_perturbation(Q: MixedHomogeneousPoly, eps: float = 0.1) -> Remainder:
    """R = eps * y_1 * Q(y); weighted degree 1 + 1/a_1 > 1, cubic when Q is quadratic."""
    mons = []
    for exps, c in Q.monomials:
        e = list(exps)
        e[0] += 1
        mons.append((tuple(e), eps * c))
    return Remainder.polynomial(mons, name="cubic_perturbation")


def smooth_cutoff(r, rho0, rho1):
    """1 on r <= rho0, 0 on r >= rho1, C^2 quintic smoothstep in between."""
    s = np.clip((rho1 - np.asarray(r, dtype=float)) / (rho1 - rho0), 0.0, 1.0)
    return s ** 3 * (10.0 + s * (-15.0 + 6.0 * s))


@dataclass(frozen=True)
class SurfacePatch:
    Q: MixedHomogeneousPoly
    R: Remainder = field(default_factory=Remainder.zero)
    c: float = 0.0
    halfwidth: float = 1.0
    cutoff: tuple = (0.5, 0.9)
    name: str = ""

    def __post_init__(self):
        rho0, rho1 = (float(v) for v in self.cutoff)
        if not 0 <= rho0 < rho1:
            raise ValidationError(f"cutoff needs 0 <= rho0 < rho1, got {self.cutoff}")
        object.__setattr__(self, "cutoff", (rho0, rho1))
        if self.halfwidth <= 0:
            raise ValidationError("domain_halfwidth must be positive")
        if not self.R.is_zero and not certificate_ok(self.R.certificate(self.Q.weights)):
            raise ValidationError(f"remainder {self.R.name!r} fails the smallness certificate")
        z = np.zeros((1, self.d))
        h0, g0 = self.height_and_grad(z)
        if abs(h0[0] - self.c) > 1e-10 or np.max(np.abs(g0)) > 1e-10:
            raise ValidationError("graph must satisfy Phi(0) = c and grad Phi(0) = 0")
        hw = float(self.halfwidth)
        for _ in range(20):
            if self._min_excess(hw) >= -1e-12:
                break
            hw *= 0.8
        else:
            raise ValidationError("Phi - c is negative arbitrarily close to the origin")
        if hw != self.halfwidth:
            log.warning("domain shrunk from %g to %g so that Phi - c >= 0", self.halfwidth, hw)
            object.__setattr__(self, "halfwidth", hw)

    def _min_excess(self, hw):
        k = 201 if self.d <= 2 else 21
        ax = np.linspace(-hw, hw, k)
        pts = np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"), -1).reshape(-1, self.d)
        return float(np.min(self.height_and_grad(pts)[0] - self.c))

    @property
    def d(self) -> int:
        return self.Q.d

    @property
    def n(self) -> int:
        return self.Q.d + 1

    @property
    def weights(self) -> WeightSystem:
        return self.Q.weights

    @property
    def domain_volume(self) -> float:
        return (2.0 * self.halfwidth) ** self.d

    def phi_poly(self):
        """(exps, coefs) of Phi - c when it is a polynomial, else None."""
        if self.R.func is not None:
            return None
        mons = list(self.Q.monomials) + list(self.R.monomials or ())
        e = np.array([m[0] for m in mons], dtype=np.int64).reshape(-1, self.d)
        return e, np.array([m[1] for m in mons])

    def excess(self, y):
        """Phi(y) - c."""
        y = np.asarray(y, dtype=float)
        poly = self.phi_poly()
        if poly is not None:
            return kernels.poly_eval(y.reshape(-1, self.d), *poly).reshape(y.shape[:-1])
        return self.Q(y) + self.R(y)

    def height_and_grad(self, y):
        y = np.asarray(y, dtype=float)
        poly = self.phi_poly()
        if poly is not None:
            v, g = kernels.poly_eval_grad(y.reshape(-1, self.d), *poly)
            return v.reshape(y.shape[:-1]) + self.c, g.reshape(y.shape)
        qv, qg = self.Q.value_and_grad(y)
        return qv + self.R(y) + self.c, qg + self.R.gradient(y)

    def measure_weight(self, y):
        _, g = self.height_and_grad(y)
        return np.sqrt(1.0 + np.sum(g * g, axis=-1))

    def psi(self, y):
        y = np.asarray(y, dtype=float)
        return smooth_cutoff(np.linalg.norm(y, axis=-1), *self.cutoff)

    def in_domain(self, y):
        return np.all(np.abs(np.asarray(y, dtype=float)) <= self.halfwidth, axis=-1)


def eval_surface(S: SurfacePatch, y):
    """(height, gradient, surface-measure weight sqrt(1 + |grad Phi|^2)) at one point."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (S.d,):
        raise ValidationError(f"expected a point with {S.d} coordinates")
    if not S.in_domain(y):
        raise DomainError(f"point {y.tolist()} lies outside K = [-{S.halfwidth}, {S.halfwidth}]^{S.d}")
    h, g = S.height_and_grad(y[None, :])
    g = g[0]
    return float(h[0]), g, math.sqrt(1.0 + float(g @ g))
