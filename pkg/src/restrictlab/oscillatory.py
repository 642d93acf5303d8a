"""Fourier transform of the cut-off surface measure and its decay along rays.

    F_S(xi) = int exp(-i(<y, xi'> + Phi(y) xi_n)) psi(y) sqrt(1 + |grad Phi|^2) dy

is evaluated by composite tensor Gauss-Legendre quadrature whose panels are
short enough that the phase turns by at most a quarter period per panel.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from ._util import atomic_write_text, exact_sum, gauss_panels
from .errors import ResourceBudgetError, ValidationError
from .fitting import ExponentFit, fit_power_law
from .surface import SurfacePatch, smooth_cutoff

NODES_PER_PANEL = 8
MIN_PANELS = 32
MAX_PANELS = {1: 16384, 2: 2048}
LAMBDA_BUDGET = {1: 2048.0, 2: 512.0}


@lru_cache(maxsize=32)
def max_gradient(S: SurfacePatch) -> float:
    """Upper estimate of |grad Phi| on the cutoff support |y| <= rho_1."""
    rho1 = S.cutoff[1]
    k = 2001 if S.d == 1 else 301
    ax = np.linspace(-rho1, rho1, k)
    pts = np.stack(np.meshgrid(*([ax] * S.d), indexing="ij"), -1).reshape(-1, S.d)
    pts = pts[np.linalg.norm(pts, axis=1) <= rho1]
    _, g = S.height_and_grad(pts)
    return 1.05 * float(np.sqrt((g * g).sum(axis=1)).max())


def _check(S: SurfacePatch):
    if S.d not in (1, 2):
        raise ValidationError("surface_measure_ft supports n - 1 in {1, 2}")
    if not S.cutoff[1] < S.halfwidth:
        raise ValidationError("cutoff radius rho_1 must lie strictly inside K")


def panel_count(S: SurfacePatch, xi, refine: int = 1) -> int:
    """Panels per axis on [-rho_1, rho_1] from the quarter-period rule."""
    xi = np.asarray(xi, dtype=float)
    rate = float(np.max(np.abs(xi[:-1]), initial=0.0)) + abs(xi[-1]) * max_gradient(S)
    width = 2 * S.cutoff[1]
    n = MIN_PANELS if rate == 0 else max(MIN_PANELS, math.ceil(width * 4 * rate / (2 * math.pi)))
    return n * refine


def _generic_1d(S, x, wx, xi):
    h, g = S.height_and_grad(x[:, None])
    amp = wx * smooth_cutoff(np.abs(x), *S.cutoff) * np.sqrt(1 + g[:, 0] ** 2)
    ph = xi[0] * x + xi[1] * (h - S.c)
    return amp * np.cos(ph), -amp * np.sin(ph)


def _generic_2d(S, x, wx, y, wy, xi):
    re = np.zeros(x.size)
    im = np.zeros(x.size)
    for i in range(x.size):
        pts = np.column_stack([np.full(y.size, x[i]), y])
        psi = S.psi(pts)
        if not psi.any():
            continue
        h, g = S.height_and_grad(pts)
        amp = wy * psi * np.sqrt(1 + (g * g).sum(axis=1))
        ph = xi[0] * x[i] + xi[1] * y + xi[2] * (h - S.c)
        re[i] = wx[i] * math.fsum(amp * np.cos(ph))
        im[i] = -wx[i] * math.fsum(amp * np.sin(ph))
    return re, im


def surface_measure_ft(S: SurfacePatch, xi, refine: int = 1, max_panels: int | None = None,
                       threads: int = 1) -> complex:
    """F_S(xi) for xi = (xi', xi_n) in R^n; ``refine`` multiplies the panel count."""
    _check(S)
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size != S.n:
        raise ValidationError(f"frequency must have {S.n} components")
    n_pan = panel_count(S, xi, refine)
    cap = (max_panels or MAX_PANELS[S.d]) * refine
    if n_pan > cap:
        raise ResourceBudgetError(f"{n_pan} panels per axis exceed the cap {cap} "
                                  f"at |xi| = {np.linalg.norm(xi):.6g}",
                                  at=float(np.linalg.norm(xi)))
    rho0, rho1 = S.cutoff
    breaks = (-rho0, rho0) if S.d == 1 else ()
    x, wx = gauss_panels(-rho1, rho1, n_pan, NODES_PER_PANEL, breaks)
    poly = S.phi_poly()
    if S.d == 1:
        if poly is not None:
            re, im = kernels.osc_sum_1d(x, wx, poly[0], poly[1], xi[0], xi[1], rho0, rho1)
        else:
            re, im = _generic_1d(S, x, wx, xi)
    else:
        def job(idx):
            if poly is not None:
                return kernels.osc_sum_2d(x[idx], wx[idx], x, wx, poly[0], poly[1],
                                          xi[0], xi[1], xi[2], rho0, rho1)
            return _generic_2d(S, x[idx], wx[idx], x, wx, xi)
        chunks = np.array_split(np.arange(x.size), max(1, 4 * threads))
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                parts = list(ex.map(job, chunks))
        else:
            parts = [job(c) for c in chunks]
        re = np.concatenate([p[0] for p in parts])
        im = np.concatenate([p[1] for p in parts])
    val = complex(math.fsum(re), math.fsum(im))
    return val * complex(math.cos(xi[-1] * S.c), -math.sin(xi[-1] * S.c))


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class DecayProfile:
    direction: tuple
    lambdas: tuple
    values: tuple
    envelope_flags: tuple
    f0: float

    @property
    def abs(self) -> np.ndarray:
        return np.abs(np.array(self.values))

    @property
    def envelope(self):
        """(lambda, |F|) at the windowed maxima."""
        lam = np.array(self.lambdas)
        flags = np.array(self.envelope_flags, dtype=bool)
        return lam[flags], self.abs[flags]


def lambda_grid(lam_min, lam_max, per_octave: int = 4) -> np.ndarray:
    if not 0 < lam_min < lam_max:
        raise ValidationError("need 0 < lambda_min < lambda_max")
    octaves = math.log2(lam_max / lam_min)
    n = max(2, int(round(octaves * per_octave)) + 1)
    return np.geomspace(lam_min, lam_max, n)


def _unit(S, theta):
    th = np.asarray(theta, dtype=float).ravel()
    if th.size != S.n:
        raise ValidationError(f"direction must have {S.n} components")
    nrm = np.linalg.norm(th)
    if abs(nrm - 1) > 1e-9:
        raise ValidationError("direction must be a unit vector")
    return th / nrm


def envelope_flags(lambdas, values):
    """Mark the maximum of |F| inside each one-octave window of the grid."""
    lam = np.asarray(lambdas, dtype=float)
    a = np.abs(np.asarray(values))
    k = np.floor(np.log2(lam / lam[0]) + 1e-9).astype(int)
    flags = np.zeros(lam.size, dtype=bool)
    for w in np.unique(k):
        idx = np.flatnonzero(k == w)
        flags[idx[np.argmax(a[idx])]] = True
    return flags


def decay_profile(S: SurfacePatch, theta, lam_min: float = 32.0, lam_max: float | None = None,
                  per_octave: int = 4, refine: int = 1, threads: int = 1) -> DecayProfile:
    """|F_S(lambda theta)| on a geometric grid with one-octave envelope maxima."""
    _check(S)
    th = _unit(S, theta)
    if lam_max is None:
        lam_max = LAMBDA_BUDGET[S.d]
    lams = lambda_grid(lam_min, lam_max, per_octave)
    vals = [surface_measure_ft(S, lam * th, refine=refine, threads=threads) for lam in lams]
    f0 = surface_measure_ft(S, np.zeros(S.n)).real
    flags = envelope_flags(lams, vals)
    return DecayProfile(tuple(th.tolist()), tuple(lams.tolist()), tuple(vals),
                        tuple(bool(f) for f in flags), f0)


def fit_decay_exponent(profile: DecayProfile) -> ExponentFit:
    """Slope of -log envelope against log lambda (the decay rate r)."""
    lam, env = profile.envelope
    if lam.size < 5:
        raise ValidationError("decay fit needs at least 5 envelope points")
    if math.log2(lam.max() / lam.min()) < 4 - 1e-9:
        raise ValidationError("envelope points must span at least 4 octaves")
    return fit_power_law(lam, 1.0 / env, min_points=5)


# -------------------------------------------------------------- scans

def hemisphere_directions(n: int, count: int) -> np.ndarray:
    """Quasi-uniform unit vectors with last coordinate > 0."""
    if n == 2:
        phi = np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(phi), np.sin(phi)])
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1 - k / count
        phi = np.pi * (1 + 5 ** 0.5) * k
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    raise ValidationError("direction scans support n in {2, 3}")


@dataclass(frozen=True)
class ScanReport:
    directions: np.ndarray
    values: np.ndarray
    lam_probe: float
    normal_value: float
    worst_index: int

    @property
    def worst_value(self) -> float:
        return float(self.values[self.worst_index])

    @property
    def worst_direction(self) -> np.ndarray:
        return self.directions[self.worst_index]


def probe_envelope(S, th, lam_probe, refine=1, threads=1):
    """max |F| over lambda_probe * 2^{-1/4, 0, 1/4} (a short window around the probe)."""
    return max(abs(surface_measure_ft(S, lam_probe * f * th, refine=refine, threads=threads))
               for f in (2 ** -0.25, 1.0, 2 ** 0.25))


def isotropic_decay_scan(S: SurfacePatch, count: int = 64, lam_probe: float = 256.0,
                         refine: int = 1, threads: int = 1) -> ScanReport:
    _check(S)
    dirs = hemisphere_directions(S.n, count)
    vals = np.array([probe_envelope(S, th, lam_probe, refine, threads) for th in dirs])
    normal = np.zeros(S.n)
    normal[-1] = 1.0
    nv = probe_envelope(S, normal, lam_probe, refine, threads)
    return ScanReport(dirs, vals, float(lam_probe), nv, int(np.argmax(vals)))


# -------------------------------------------------------------- output

def profile_csv(profile: DecayProfile) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["lambda", "re", "im", "abs", "envelope_flag"])
    for lam, v, f in zip(profile.lambdas, profile.values, profile.envelope_flags):
        wr.writerow([repr(lam), repr(v.real), repr(v.imag), repr(abs(v)), int(f)])
    return buf.getvalue()


def scan_csv(report: ScanReport) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    n = report.directions.shape[1]
    wr.writerow(["theta_index"] + [f"theta_{k + 1}" for k in range(n)] + ["abs_at_probe"])
    for i, (th, v) in enumerate(zip(report.directions, report.values)):
        wr.writerow([i] + [repr(float(c)) for c in th] + [repr(float(v))])
    return buf.getvalue()


def gnuplot_columns(x, y, header: str = "") -> str:
    """Whitespace-separated two-column data for log-log plots."""
    lines = [f"# {header}"] if header else []
    lines += [f"{float(a)!r} {float(b)!r}" for a, b in zip(x, y)]
    return "\n".join(lines) + "\n"


def write_profile(profile: DecayProfile, csv_path, dat_path=None) -> None:
    atomic_write_text(csv_path, profile_csv(profile))
    if dat_path is not None:
        lam, env = profile.envelope
        atomic_write_text(dat_path, gnuplot_columns(lam, env, "lambda envelope"))
