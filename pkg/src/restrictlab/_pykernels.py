"""Pure NumPy versions of the compiled kernels (same signatures and outputs)."""
import numpy as np

THETA = 1e-3
SERIES_SPREAD = 1.0
SERIES_TERMS = 30
_CHUNK = 1 << 16


def _monomials(pts, exps):
    # (N, M) table of prod_j y_j ** alpha_mj
    pts = np.asarray(pts, dtype=float)
    out = np.ones((pts.shape[0], exps.shape[0]))
    for j in range(pts.shape[1]):
        out *= pts[:, j, None] ** exps[None, :, j]
    return out


def poly_eval(pts, exps, coefs):
    pts = np.ascontiguousarray(pts, dtype=float)
    out = np.empty(pts.shape[0])
    for s in range(0, pts.shape[0], _CHUNK):
        out[s:s + _CHUNK] = _monomials(pts[s:s + _CHUNK], exps) @ coefs
    return out


def poly_eval_grad(pts, exps, coefs):
    pts = np.ascontiguousarray(pts, dtype=float)
    n, d = pts.shape
    vals = poly_eval(pts, exps, coefs)
    grads = np.zeros((n, d))
    for j in range(d):
        mask = exps[:, j] > 0
        if not mask.any():
            continue
        e = exps[mask].copy()
        c = coefs[mask] * e[:, j]
        e[:, j] -= 1
        grads[:, j] = poly_eval(pts, e, c)
    return vals, grads


def count_le(pts, exps, coefs, thresh):
    return int(np.count_nonzero(poly_eval(pts, exps, coefs) <= thresh))


def grid_bracket(lo, hi, res, exps, coefs, thresh):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.shape[0]
    if d == 1:
        x = lo[0] + (hi[0] - lo[0]) * np.arange(res + 1) / res
        ok = poly_eval(x[:, None], exps, coefs) <= thresh
        return int(np.count_nonzero(ok[1:] & ok[:-1])), int(np.count_nonzero(ok[1:] | ok[:-1]))
    if d != 2:
        raise ValueError("grid_bracket supports d in {1, 2}")
    ax0 = lo[0] + (hi[0] - lo[0]) * np.arange(res + 1) / res
    ax1 = lo[1] + (hi[1] - lo[1]) * np.arange(res + 1) / res
    n_all = n_any = 0
    prev = None
    block = max(1, _CHUNK // (res + 1))
    for s in range(0, res + 1, block):
        xs = ax0[s:s + block]
        pts = np.column_stack([np.repeat(xs, res + 1), np.tile(ax1, xs.size)])
        ok = (poly_eval(pts, exps, coefs) <= thresh).reshape(xs.size, res + 1)
        if prev is not None:
            ok = np.vstack([prev, ok])
        cnt = (ok[1:, 1:].astype(np.int8) + ok[1:, :-1] + ok[:-1, 1:] + ok[:-1, :-1])
        n_all += int(np.count_nonzero(cnt == 4))
        n_any += int(np.count_nonzero(cnt > 0))
        prev = ok[-1:]
    return n_all, n_any


def _cutoff(r, rho0, rho1):
    s = np.clip((rho1 - r) / (rho1 - rho0), 0.0, 1.0)
    return s ** 3 * (10.0 + s * (-15.0 + 6.0 * s))


def osc_sum_1d(x, wx, exps, coefs, xi_t, xi_n, rho0, rho1):
    x = np.asarray(x, dtype=float)
    psi = _cutoff(np.abs(x), rho0, rho1)
    P, g = poly_eval_grad(x[:, None], exps, coefs)
    amp = wx * psi * np.sqrt(1.0 + g[:, 0] ** 2)
    ph = xi_t * x + xi_n * P
    return amp * np.cos(ph), -amp * np.sin(ph)


def osc_sum_2d(x, wx, y, wy, exps, coefs, xi_t0, xi_t1, xi_n, rho0, rho1):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    re = np.zeros(x.size)
    im = np.zeros(x.size)
    rows = np.flatnonzero(np.abs(x) < rho1)
    block = max(1, (1 << 20) // max(y.size, 1))
    for s in range(0, rows.size, block):
        idx = rows[s:s + block]
        X = np.repeat(x[idx], y.size)
        Y = np.tile(y, idx.size)
        psi = _cutoff(np.hypot(X, Y), rho0, rho1)
        keep = psi > 0
        P, g = poly_eval_grad(np.column_stack([X[keep], Y[keep]]), exps, coefs)
        amp = np.zeros(X.size)
        ph = np.zeros(X.size)
        amp[keep] = np.tile(wy, idx.size)[keep] * psi[keep] * np.sqrt(1.0 + (g ** 2).sum(axis=1))
        ph[keep] = xi_t0 * X[keep] + xi_t1 * Y[keep] + xi_n * P
        re[idx] = wx[idx] * (amp * np.cos(ph)).reshape(idx.size, y.size).sum(axis=1)
        im[idx] = wx[idx] * (-amp * np.sin(ph)).reshape(idx.size, y.size).sum(axis=1)
    return re, im


def dd1(a, b):
    """[a, b] exp(-i t) evaluated stably for arrays."""
    mu = 0.5 * (a + b)
    h = 0.5 * (b - a)
    return -1j * np.exp(-1j * mu) * np.sinc(h / np.pi)


def dd3_partial(a, b, c):
    return (np.exp(-1j * a) / ((a - b) * (a - c)) + np.exp(-1j * b) / ((b - a) * (b - c))
            + np.exp(-1j * c) / ((c - a) * (c - b)))


def dd3_series(a, b, c, terms=SERIES_TERMS):
    mu = (a + b + c) / 3.0
    s0, s1, s2 = a - mu, b - mu, c - mu
    h1 = np.ones_like(a)
    h2 = np.ones_like(a)
    h3 = np.ones_like(a)
    total = np.zeros(np.shape(a), dtype=complex)
    fact = 2.0
    for k in range(2, terms + 2):
        if k > 2:
            h1 = h1 * s0
            h2 = h1 + s1 * h2
            h3 = h2 + s2 * h3
        total = total + (-1j) ** k / fact * h3
        fact *= k + 1
    return np.exp(-1j * mu) * total


def dd3(t0, t1, t2):
    t = np.sort(np.stack([t0, t1, t2]), axis=0)
    a, b, c = t
    out = np.empty(a.shape, dtype=complex)
    sep = (b - a >= THETA) & (c - b >= THETA)
    wide = ~sep & (c - a >= SERIES_SPREAD)
    tight = ~sep & ~wide
    with np.errstate(divide="ignore", invalid="ignore"):
        out[sep] = dd3_partial(a[sep], b[sep], c[sep])
    out[wide] = (dd1(b[wide], c[wide]) - dd1(a[wide], b[wide])) / (c[wide] - a[wide])
    out[tight] = dd3_series(a[tight], b[tight], c[tight])
    return out


def _areas(tris):
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1])


def tri_ft(tris, xi):
    tris = np.asarray(tris, dtype=float)
    xi = np.asarray(xi, dtype=float)
    areas = _areas(tris)
    out = np.zeros(xi.shape[0], dtype=complex)
    for s in range(0, xi.shape[0], _CHUNK):
        k = xi[s:s + _CHUNK]
        acc = np.zeros(k.shape[0], dtype=complex)
        for m in range(tris.shape[0]):
            t = tris[m] @ k.T
            acc -= 2.0 * areas[m] * dd3(t[0], t[1], t[2])
        out[s:s + _CHUNK] = acc
    return out


def tri_ft_abs_p(tris, gx, wx, gy, wy, p):
    gx = np.asarray(gx, dtype=float)
    gy = np.asarray(gy, dtype=float)
    rows = np.zeros(gx.size)
    block = max(1, _CHUNK // gy.size)
    for s in range(0, gx.size, block):
        xs = gx[s:s + block]
        xi = np.column_stack([np.repeat(xs, gy.size), np.tile(gy, xs.size)])
        val = np.abs(tri_ft(tris, xi)).reshape(xs.size, gy.size) ** p
        rows[s:s + block] = wx[s:s + block] * (val * wy[None, :]).sum(axis=1)
    return rows
