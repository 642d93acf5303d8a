import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrictlab import _pykernels, kernels
from restrictlab._util import exact_sum, gauss_panels, geometric_grid
from tests.conftest import BACKENDS

needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")

EXPS = np.array([[2, 0], [0, 4], [1, 3]], dtype=np.int64)
COEFS = np.array([1.0, 1.0, 0.25])


def _both():
    return kernels.get_backend("python"), kernels.get_backend("compiled")


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


def test_poly_eval_matches_numpy(backend, rng):
    pts = rng.uniform(-2, 2, (1000, 2))
    ref = pts[:, 0] ** 2 + pts[:, 1] ** 4 + 0.25 * pts[:, 0] * pts[:, 1] ** 3
    np.testing.assert_allclose(kernels.poly_eval(pts, EXPS, COEFS), ref, rtol=1e-14, atol=1e-14)


def test_poly_grad_matches_numpy(backend, rng):
    pts = rng.uniform(-2, 2, (500, 2))
    _, g = kernels.poly_eval_grad(pts, EXPS, COEFS)
    x, y = pts.T
    np.testing.assert_allclose(g[:, 0], 2 * x + 0.25 * y ** 3, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(g[:, 1], 4 * y ** 3 + 0.75 * x * y ** 2, rtol=1e-13, atol=1e-13)


def test_count_le_and_bracket(backend):
    # 1-D: x^2 <= 1/4 on [-1, 1] with 64 cells; the two cells touching x = +-1/2
    # at a corner count only towards the upper bracket
    e = np.array([[2]], dtype=np.int64)
    c = np.array([1.0])
    n_all, n_any = kernels.grid_bracket(np.array([-1.0]), np.array([1.0]), 64, e, c, 0.25)
    assert (n_all, n_any) == (32, 34)
    pts = np.linspace(-1, 1, 201)[:, None]
    assert kernels.count_le(pts, e, c, 0.25) == 101


@needs_both
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 2.0))
def test_cross_backend_counts(seed, thresh):
    py, cc = _both()
    pts = np.random.default_rng(seed).uniform(-1.5, 1.5, (4096, 2))
    assert py.count_le(pts, EXPS, COEFS, thresh) == cc.count_le(pts, EXPS, COEFS, thresh)
    lo, hi = np.array([-1.0, -1.2]), np.array([1.1, 0.9])
    assert py.grid_bracket(lo, hi, 97, EXPS, COEFS, thresh) == \
        cc.grid_bracket(lo, hi, 97, EXPS, COEFS, thresh)


@needs_both
@settings(max_examples=20, deadline=None)
@given(st.floats(-200, 200), st.floats(-200, 200), st.floats(-300, 300))
def test_cross_backend_oscillatory(a, b, c):
    py, cc = _both()
    x, w = gauss_panels(-0.9, 0.9, 40, 8)
    e = np.array([[2, 0], [0, 4]], dtype=np.int64)
    k = np.array([1.0, 1.0])
    r1 = py.osc_sum_2d(x, w, x, w, e, k, a, b, c, 0.5, 0.9)
    r2 = cc.osc_sum_2d(x, w, x, w, e, k, a, b, c, 0.5, 0.9)
    for u, v in zip(r1, r2):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-14)
    e1 = np.array([[2]], dtype=np.int64)
    s1 = py.osc_sum_1d(x, w, e1, k[:1], a, c, 0.5, 0.9)
    s2 = cc.osc_sum_1d(x, w, e1, k[:1], a, c, 0.5, 0.9)
    for u, v in zip(s1, s2):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-14)


@needs_both
@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6),
       st.floats(-60, 60), st.floats(-60, 60))
def test_cross_backend_triangle_ft(coords, x, y):
    tri = np.array(coords).reshape(1, 3, 2)
    e1, e2 = tri[0, 1] - tri[0, 0], tri[0, 2] - tri[0, 0]
    if abs(e1[0] * e2[1] - e1[1] * e2[0]) < 1e-3:
        return
    py, cc = _both()
    xi = np.array([[x, y], [0.0, 0.0], [x, 0.0]])
    v1, v2 = py.tri_ft(tri, xi), cc.tri_ft(tri, xi)
    np.testing.assert_allclose(v1, v2, rtol=1e-9, atol=1e-12)


def test_dd3_paths_agree_near_threshold():
    th = _pykernels.THETA
    for gap in (0.5 * th, 0.999 * th, 1.001 * th, 2 * th):
        a = np.array([0.3])
        b, c = a + gap, a + 2.3 * gap
        assert abs(_pykernels.dd3_series(a, b, c) - _pykernels.dd3_partial(a, b, c))[0] < 1e-8


def test_gauss_panels_integrates_polynomials():
    x, w = gauss_panels(-1, 2, 5, 8, breaks=(0.3,))
    assert np.all(np.diff(x) > 0)
    assert abs(np.sum(w * x ** 7) - (2 ** 8 - 1) / 8) < 1e-12


def test_exact_sum_complex():
    vals = np.array([1e16, 1.0, -1e16, 1j])
    assert exact_sum(vals) == complex(1.0, 1.0)


def test_geometric_grid():
    g = geometric_grid(1.0, 1e-3, 4)
    np.testing.assert_allclose(g, [1, 0.1, 0.01, 0.001])
