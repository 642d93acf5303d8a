# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Every function here has a NumPy twin in
``_pykernels`` with the same signature; ``kernels`` picks one at import.

Polynomials are passed as an exponent table ``exps[M, d]`` (int64) and a
coefficient vector ``coefs[M]``. All reductions that feed user-visible
numbers return per-row partials so the caller can sum them in a fixed order.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fabs, hypot, pow

cnp.import_array()

cdef enum:
    MAXD = 8
    MAXE = 64
    SERIES_TERMS = 30

cdef double THETA = 1e-3
cdef double SERIES_SPREAD = 1.0


cdef inline void _powers(const double* y, int d, int maxe, double* pw) noexcept nogil:
    # pw[j*MAXE + k] = y_j ** k
    cdef int j, k
    for j in range(d):
        pw[j * MAXE] = 1.0
        for k in range(1, maxe + 1):
            pw[j * MAXE + k] = pw[j * MAXE + k - 1] * y[j]


cdef inline double _peval(const double* pw, const long long[:, ::1] exps,
                          const double[::1] coefs, int d) noexcept nogil:
    cdef int m, j
    cdef double acc = 0.0, t
    for m in range(exps.shape[0]):
        t = coefs[m]
        for j in range(d):
            t *= pw[j * MAXE + exps[m, j]]
        acc += t
    return acc


cdef inline double _peval_grad(const double* pw, const long long[:, ::1] exps,
                               const double[::1] coefs, int d, double* g) noexcept nogil:
    cdef int m, j, i
    cdef long long a
    cdef double acc = 0.0, t, dt
    for j in range(d):
        g[j] = 0.0
    for m in range(exps.shape[0]):
        t = coefs[m]
        for j in range(d):
            t *= pw[j * MAXE + exps[m, j]]
        acc += t
        for j in range(d):
            a = exps[m, j]
            if a == 0:
                continue
            dt = coefs[m] * a * pw[j * MAXE + a - 1]
            for i in range(d):
                if i != j:
                    dt *= pw[i * MAXE + exps[m, i]]
            g[j] += dt
    return acc


cdef int _maxexp(const long long[:, ::1] exps) except -1:
    cdef int m, j
    cdef long long mx = 0
    if exps.shape[1] > MAXD:
        raise ValueError("dimension too large for compiled kernels")
    for m in range(exps.shape[0]):
        for j in range(exps.shape[1]):
            if exps[m, j] < 0:
                raise ValueError("negative exponent")
            if exps[m, j] > mx:
                mx = exps[m, j]
    if mx >= MAXE:
        raise ValueError("exponent too large for compiled kernels")
    return <int>mx


def poly_eval(const double[:, ::1] pts, const long long[:, ::1] exps, const double[::1] coefs):
    cdef Py_ssize_t n = pts.shape[0], i
    cdef int d = pts.shape[1], maxe = _maxexp(exps)
    cdef double pw[MAXD * MAXE]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            _powers(&pts[i, 0], d, maxe, pw)
            o[i] = _peval(pw, exps, coefs, d)
    return out


def poly_eval_grad(const double[:, ::1] pts, const long long[:, ::1] exps, const double[::1] coefs):
    cdef Py_ssize_t n = pts.shape[0], i
    cdef int d = pts.shape[1], maxe = _maxexp(exps), j
    cdef double pw[MAXD * MAXE]
    cdef double g[MAXD]
    vals = np.empty(n)
    grads = np.empty((n, d))
    cdef double[::1] v = vals
    cdef double[:, ::1] gr = grads
    with nogil:
        for i in range(n):
            _powers(&pts[i, 0], d, maxe, pw)
            v[i] = _peval_grad(pw, exps, coefs, d, g)
            for j in range(d):
                gr[i, j] = g[j]
    return vals, grads


def count_le(const double[:, ::1] pts, const long long[:, ::1] exps, const double[::1] coefs,
             double thresh):
    cdef Py_ssize_t n = pts.shape[0], i
    cdef int d = pts.shape[1], maxe = _maxexp(exps)
    cdef double pw[MAXD * MAXE]
    cdef long long cnt = 0
    with nogil:
        for i in range(n):
            _powers(&pts[i, 0], d, maxe, pw)
            if _peval(pw, exps, coefs, d) <= thresh:
                cnt += 1
    return int(cnt)


def grid_bracket(const double[::1] lo, const double[::1] hi, Py_ssize_t res,
                 const long long[:, ::1] exps, const double[::1] coefs, double thresh):
    """Return (cells with every corner <= thresh, cells with some corner <= thresh)."""
    cdef int d = lo.shape[0], maxe = _maxexp(exps)
    cdef double pw[MAXD * MAXE]
    cdef double y[MAXD]
    cdef Py_ssize_t i, j
    cdef long long n_all = 0, n_any = 0
    cdef int c
    cdef int prev = 0
    if d == 1:
        with nogil:
            for i in range(res + 1):
                y[0] = lo[0] + (hi[0] - lo[0]) * i / res
                _powers(y, 1, maxe, pw)
                c = _peval(pw, exps, coefs, 1) <= thresh
                if i > 0:
                    if c and prev:
                        n_all += 1
                    if c or prev:
                        n_any += 1
                prev = c
        return int(n_all), int(n_any)
    if d != 2:
        raise ValueError("compiled grid_bracket supports d in {1, 2}")
    rows = np.zeros((2, res + 1), dtype=np.int8)
    cdef signed char[:, ::1] rr = rows
    cdef int s, cur = 0, old = 1
    with nogil:
        for i in range(res + 1):
            y[0] = lo[0] + (hi[0] - lo[0]) * i / res
            for j in range(res + 1):
                y[1] = lo[1] + (hi[1] - lo[1]) * j / res
                _powers(y, 2, maxe, pw)
                rr[cur, j] = _peval(pw, exps, coefs, 2) <= thresh
            if i > 0:
                for j in range(res):
                    s = rr[old, j] + rr[old, j + 1] + rr[cur, j] + rr[cur, j + 1]
                    if s == 4:
                        n_all += 1
                    if s > 0:
                        n_any += 1
            cur = 1 - cur
            old = 1 - old
    return int(n_all), int(n_any)


cdef inline double _cutoff(double r, double rho0, double rho1) noexcept nogil:
    cdef double s
    if r <= rho0:
        return 1.0
    if r >= rho1:
        return 0.0
    s = (rho1 - r) / (rho1 - rho0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def osc_sum_1d(const double[::1] x, const double[::1] wx, const long long[:, ::1] exps,
               const double[::1] coefs, double xi_t, double xi_n, double rho0, double rho1):
    """Per-node terms w psi sqrt(1+P'^2) exp(-i(xi_t y + xi_n P)) as (re, im) arrays."""
    cdef Py_ssize_t n = x.shape[0], i
    cdef int maxe = _maxexp(exps)
    cdef double pw[MAXE]
    cdef double g[1]
    cdef double y[1]
    cdef double P, psi, amp, ph
    re = np.zeros(n)
    im = np.zeros(n)
    cdef double[::1] rv = re
    cdef double[::1] iv = im
    with nogil:
        for i in range(n):
            psi = _cutoff(fabs(x[i]), rho0, rho1)
            if psi == 0.0:
                continue
            y[0] = x[i]
            _powers(y, 1, maxe, pw)
            P = _peval_grad(pw, exps, coefs, 1, g)
            amp = wx[i] * psi * sqrt(1.0 + g[0] * g[0])
            ph = xi_t * x[i] + xi_n * P
            rv[i] = amp * cos(ph)
            iv[i] = -amp * sin(ph)
    return re, im


def osc_sum_2d(const double[::1] x, const double[::1] wx, const double[::1] yv,
               const double[::1] wy, const long long[:, ::1] exps, const double[::1] coefs,
               double xi_t0, double xi_t1, double xi_n, double rho0, double rho1):
    """Row partial sums (Neumaier-compensated) of the 2-D tensor rule."""
    cdef Py_ssize_t nx = x.shape[0], ny = yv.shape[0], i, j
    cdef int maxe = _maxexp(exps)
    cdef double pw[2 * MAXE]
    cdef double g[2]
    cdef double y[2]
    cdef double P, psi, amp, ph, r, tr, ti, sr, si, cr, ci, t
    re = np.zeros(nx)
    im = np.zeros(nx)
    cdef double[::1] rv = re
    cdef double[::1] iv = im
    with nogil:
        for i in range(nx):
            if fabs(x[i]) >= rho1:
                continue
            sr = 0.0
            si = 0.0
            cr = 0.0
            ci = 0.0
            y[0] = x[i]
            for j in range(ny):
                r = hypot(x[i], yv[j])
                psi = _cutoff(r, rho0, rho1)
                if psi == 0.0:
                    continue
                y[1] = yv[j]
                _powers(y, 2, maxe, pw)
                P = _peval_grad(pw, exps, coefs, 2, g)
                amp = wy[j] * psi * sqrt(1.0 + g[0] * g[0] + g[1] * g[1])
                ph = xi_t0 * x[i] + xi_t1 * yv[j] + xi_n * P
                tr = amp * cos(ph)
                ti = -amp * sin(ph)
                t = sr + tr
                if fabs(sr) >= fabs(tr):
                    cr += (sr - t) + tr
                else:
                    cr += (tr - t) + sr
                sr = t
                t = si + ti
                if fabs(si) >= fabs(ti):
                    ci += (si - t) + ti
                else:
                    ci += (ti - t) + si
                si = t
            rv[i] = wx[i] * (sr + cr)
            iv[i] = wx[i] * (si + ci)
    return re, im


cdef inline void _dd1(double a, double b, double* re, double* im) noexcept nogil:
    # [a, b] exp(-i t) = -i exp(-i mu) sin(h)/h, h = (b - a)/2
    cdef double mu = 0.5 * (a + b), h = 0.5 * (b - a), sc, h2
    if fabs(h) < 1e-4:
        h2 = h * h
        sc = 1.0 - h2 / 6.0 + h2 * h2 / 120.0
    else:
        sc = sin(h) / h
    # -i (cos mu - i sin mu) = -sin mu - i cos mu
    re[0] = -sin(mu) * sc
    im[0] = -cos(mu) * sc


cdef inline void _dd3_series(double a, double b, double c, double* re, double* im) noexcept nogil:
    cdef double mu = (a + b + c) / 3.0
    cdef double s0 = a - mu, s1 = b - mu, s2 = c - mu
    cdef double h1[SERIES_TERMS]
    cdef double h2[SERIES_TERMS]
    cdef double h3[SERIES_TERMS]
    cdef int j, k
    cdef double fact, sr = 0.0, si = 0.0, term, cm, sm
    h1[0] = 1.0
    h2[0] = 1.0
    h3[0] = 1.0
    for j in range(1, SERIES_TERMS):
        h1[j] = h1[j - 1] * s0
        h2[j] = h1[j] + s1 * h2[j - 1]
        h3[j] = h2[j] + s2 * h3[j - 1]
    # sum_{k>=2} (-i)^k / k! h_{k-2}
    fact = 2.0
    for k in range(2, SERIES_TERMS + 2):
        term = h3[k - 2] / fact
        j = k % 4
        if j == 0:
            sr += term
        elif j == 1:
            si -= term
        elif j == 2:
            sr -= term
        else:
            si += term
        fact *= (k + 1)
    cm = cos(mu)
    sm = sin(mu)
    # exp(-i mu) (sr + i si)
    re[0] = cm * sr + sm * si
    im[0] = cm * si - sm * sr


cdef inline void _dd3(double a, double b, double c, double* re, double* im) noexcept nogil:
    cdef double t, r1, i1, r2, i2, da, db, dc
    if a > b:
        t = a; a = b; b = t
    if b > c:
        t = b; b = c; c = t
    if a > b:
        t = a; a = b; b = t
    if b - a >= THETA and c - b >= THETA:
        da = 1.0 / ((a - b) * (a - c))
        db = 1.0 / ((b - a) * (b - c))
        dc = 1.0 / ((c - a) * (c - b))
        re[0] = cos(a) * da + cos(b) * db + cos(c) * dc
        im[0] = -(sin(a) * da + sin(b) * db + sin(c) * dc)
        return
    if c - a >= SERIES_SPREAD:
        _dd1(a, b, &r1, &i1)
        _dd1(b, c, &r2, &i2)
        re[0] = (r2 - r1) / (c - a)
        im[0] = (i2 - i1) / (c - a)
        return
    _dd3_series(a, b, c, re, im)


def tri_ft(const double[:, :, ::1] tris, const double[:, ::1] xi):
    """Sum over triangles of the exact indicator transform at each frequency."""
    cdef Py_ssize_t nt = tris.shape[0], nk = xi.shape[0], k, m
    cdef double area, ddr, ddi, sr, si, t0, t1, t2
    areas = np.empty(nt)
    cdef double[::1] ar = areas
    for m in range(nt):
        ar[m] = 0.5 * fabs((tris[m, 1, 0] - tris[m, 0, 0]) * (tris[m, 2, 1] - tris[m, 0, 1])
                           - (tris[m, 2, 0] - tris[m, 0, 0]) * (tris[m, 1, 1] - tris[m, 0, 1]))
    out = np.empty(nk, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for k in range(nk):
            sr = 0.0
            si = 0.0
            for m in range(nt):
                t0 = tris[m, 0, 0] * xi[k, 0] + tris[m, 0, 1] * xi[k, 1]
                t1 = tris[m, 1, 0] * xi[k, 0] + tris[m, 1, 1] * xi[k, 1]
                t2 = tris[m, 2, 0] * xi[k, 0] + tris[m, 2, 1] * xi[k, 1]
                _dd3(t0, t1, t2, &ddr, &ddi)
                sr -= 2.0 * ar[m] * ddr
                si -= 2.0 * ar[m] * ddi
            o[k] = sr + 1j * si
    return out


def tri_ft_abs_p(const double[:, :, ::1] tris, const double[::1] gx, const double[::1] wx,
                 const double[::1] gy, const double[::1] wy, double p):
    """Row partials of sum_ij wx_i wy_j |chi_hat(gx_i, gy_j)|^p."""
    cdef Py_ssize_t nt = tris.shape[0], nx = gx.shape[0], ny = gy.shape[0], i, j, m
    cdef double ddr, ddi, sr, si, t0, t1, t2, acc, comp, term, t
    areas = np.empty(nt)
    cdef double[::1] ar = areas
    for m in range(nt):
        ar[m] = 0.5 * fabs((tris[m, 1, 0] - tris[m, 0, 0]) * (tris[m, 2, 1] - tris[m, 0, 1])
                           - (tris[m, 2, 0] - tris[m, 0, 0]) * (tris[m, 1, 1] - tris[m, 0, 1]))
    rows = np.zeros(nx)
    cdef double[::1] rw = rows
    with nogil:
        for i in range(nx):
            acc = 0.0
            comp = 0.0
            for j in range(ny):
                sr = 0.0
                si = 0.0
                for m in range(nt):
                    t0 = tris[m, 0, 0] * gx[i] + tris[m, 0, 1] * gy[j]
                    t1 = tris[m, 1, 0] * gx[i] + tris[m, 1, 1] * gy[j]
                    t2 = tris[m, 2, 0] * gx[i] + tris[m, 2, 1] * gy[j]
                    _dd3(t0, t1, t2, &ddr, &ddi)
                    sr -= 2.0 * ar[m] * ddr
                    si -= 2.0 * ar[m] * ddi
                term = wy[j] * pow(sr * sr + si * si, 0.5 * p)
                t = acc + term
                if acc >= term:
                    comp += (acc - t) + term
                else:
                    comp += (term - t) + acc
                acc = t
            rw[i] = wx[i] * (acc + comp)
    return rows
