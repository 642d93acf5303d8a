"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``RESTRICTLAB_PURE`` is set to a non-empty value other
than ``0``) the NumPy implementations are used. ``BACKEND`` names the choice.
"""
import os

import numpy as np

from . import _pykernels

_FUNCS = ("poly_eval", "poly_eval_grad", "count_le", "grid_bracket",
          "osc_sum_1d", "osc_sum_2d", "tri_ft", "tri_ft_abs_p")


def _load(pure):
    if not pure:
        try:
            from . import _ckernels as mod
            return mod, "compiled"
        except ImportError:
            pass
    return _pykernels, "python"


_impl, BACKEND = _load(os.environ.get("RESTRICTLAB_PURE", "") not in ("", "0"))


def get_backend(name):
    """Module object for ``"compiled"`` or ``"python"`` (for tests and benchmarks)."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def _as_poly(exps, coefs):
    return (np.ascontiguousarray(exps, dtype=np.int64),
            np.ascontiguousarray(coefs, dtype=np.float64))


def poly_eval(pts, exps, coefs):
    exps, coefs = _as_poly(exps, coefs)
    return _impl.poly_eval(np.ascontiguousarray(pts, dtype=np.float64), exps, coefs)


def poly_eval_grad(pts, exps, coefs):
    exps, coefs = _as_poly(exps, coefs)
    return _impl.poly_eval_grad(np.ascontiguousarray(pts, dtype=np.float64), exps, coefs)


def count_le(pts, exps, coefs, thresh):
    exps, coefs = _as_poly(exps, coefs)
    return _impl.count_le(np.ascontiguousarray(pts, dtype=np.float64), exps, coefs, float(thresh))


def grid_bracket(lo, hi, res, exps, coefs, thresh):
    exps, coefs = _as_poly(exps, coefs)
    return _impl.grid_bracket(np.ascontiguousarray(lo, dtype=np.float64),
                              np.ascontiguousarray(hi, dtype=np.float64),
                              int(res), exps, coefs, float(thresh))


def osc_sum_1d(x, wx, exps, coefs, xi_t, xi_n, rho0, rho1):
    exps, coefs = _as_poly(exps, coefs)
    return _impl.osc_sum_1d(np.ascontiguousarray(x, dtype=np.float64),
                            np.ascontiguousarray(wx, dtype=np.float64),
                            exps, coefs, float(xi_t), float(xi_n), float(rho0), float(rho1))


def osc_sum_2d(x, wx, y, wy, exps, coefs, xi_t0, xi_t1, xi_n, rho0, rho1):
    exps, coefs = _as_poly(exps, coefs)
    f = np.ascontiguousarray
    return _impl.osc_sum_2d(f(x, dtype=np.float64), f(wx, dtype=np.float64),
                            f(y, dtype=np.float64), f(wy, dtype=np.float64), exps, coefs,
                            float(xi_t0), float(xi_t1), float(xi_n), float(rho0), float(rho1))


def tri_ft(tris, xi):
    return _impl.tri_ft(np.ascontiguousarray(tris, dtype=np.float64),
                        np.ascontiguousarray(xi, dtype=np.float64))


def tri_ft_abs_p(tris, gx, wx, gy, wy, p):
    f = np.ascontiguousarray
    return _impl.tri_ft_abs_p(f(tris, dtype=np.float64), f(gx, dtype=np.float64),
                              f(wx, dtype=np.float64), f(gy, dtype=np.float64),
                              f(wy, dtype=np.float64), float(p))
