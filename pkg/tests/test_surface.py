from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from restrictlab.builtins import builtin_names, builtin_poly, builtin_surface, list_builtins
from restrictlab.errors import DomainError, ValidationError
from restrictlab.surface import (MixedHomogeneousPoly, Remainder, SurfacePatch,
                                 certificate_ok, check_mixed_homogeneity, cubic_perturbation,
                                 dilate, eval_surface, make_weights, smooth_cutoff)


@pytest.mark.parametrize("a,m,r", [((2,), Fraction(2), Fraction(1, 2)),
                                   ((4,), Fraction(4), Fraction(1, 4)),
                                   ((2, 2), Fraction(2), Fraction(1)),
                                   ((2, 4), Fraction(8, 3), Fraction(3, 4)),
                                   ((4, 4), Fraction(4), Fraction(1, 2))])
def test_weight_degree(a, m, r):
    w = make_weights(a)
    assert w.m == m and w.r_vol == r
    assert w.r_vol == Fraction(w.d) / w.m


def test_weights_reject_bad_input():
    for bad in ([], [0], [2.5], [-2]):
        with pytest.raises(ValidationError):
            make_weights(bad)


def test_dilation_group_law():
    w = make_weights((2, 4))
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(dilate(dilate(x, 3.0, w), 5.0, w), dilate(x, 15.0, w), rtol=1e-15)
    with pytest.raises(ValidationError):
        dilate(x, 0.0, w)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(builtin_names()), st.floats(1e-4, 1e4), st.floats(-1, 1), st.floats(-1, 1))
def test_homogeneity_property(name, t, x1, x2):
    Q = builtin_poly(name)
    x = np.array([x1, x2][:Q.d])
    lhs = Q(dilate(x[None, :], t, Q.weights))[0]
    rhs = t * Q(x[None, :])[0]
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300) + 1e-300


def test_homogeneity_report_all_builtins():
    for name in builtin_names():
        rep = check_mixed_homogeneity(builtin_poly(name))
        assert rep.passed and rep.max_rel_error < 1e-10


def test_wrong_degree_rejected():
    w = make_weights((2, 4))
    with pytest.raises(ValidationError, match="degree"):
        MixedHomogeneousPoly(w, (((2, 0), 1.0), ((0, 2), 1.0)))


def test_non_positive_rejected():
    w = make_weights((2, 2))
    with pytest.raises(ValidationError, match="positive"):
        MixedHomogeneousPoly(w, (((2, 0), 1.0), ((0, 2), -1.0)))


def test_value_and_grad():
    Q = builtin_poly("mixed")
    y = np.array([[0.5, -0.5]])
    v, g = Q.value_and_grad(y)
    assert v[0] == pytest.approx(0.25 + 0.0625)
    np.testing.assert_allclose(g[0], [1.0, -0.5])


def test_remainder_certificate():
    Q = builtin_poly("paraboloid")
    R = cubic_perturbation(Q)
    rows = R.certificate(Q.weights)
    assert certificate_ok(rows)
    assert rows[-1][1] < 1e-2 * rows[0][1]
    # a remainder of the same weighted degree as Q fails
    bad = Remainder.polynomial([((2, 0), 0.5)])
    assert not certificate_ok(bad.certificate(Q.weights))
    with pytest.raises(ValidationError, match="certificate"):
        SurfacePatch(Q, bad)


def test_remainder_callable_gradient():
    R = Remainder("cubic", func=lambda y: y[..., 0] ** 3)
    g = R.gradient(np.array([[0.5]]))
    assert g[0, 0] == pytest.approx(0.75, rel=1e-8)


def test_cutoff_profile():
    r = np.linspace(0, 1, 1001)
    psi = smooth_cutoff(r, 0.5, 0.9)
    assert np.all(psi[r <= 0.5] == 1) and np.all(psi[r >= 0.9] == 0)
    assert np.all(np.diff(psi) <= 0)
    # C^2: second differences stay bounded across the junctions
    d2 = np.diff(psi, 2) / (r[1] - r[0]) ** 2
    assert np.abs(d2).max() < 60


def test_eval_surface_and_domain():
    S = builtin_surface("mixed", offset=2.0)
    h, g, wt = eval_surface(S, [0.5, 0.5])
    assert h == pytest.approx(2.0 + 0.25 + 0.0625)
    assert wt == pytest.approx(np.sqrt(1 + 1 + 0.25))
    with pytest.raises(DomainError):
        eval_surface(S, [1.5, 0.0])


def test_bad_cutoff_rejected():
    with pytest.raises(ValidationError):
        builtin_surface("parabola", cutoff=(0.9, 0.5))


def test_builtin_table():
    rows = list_builtins()
    assert len(rows) == 6
    by = {r["name"]: r for r in rows}
    assert by["saddle"]["flag"] == "no-fpt"
    assert [by[n]["r"] for n in ("parabola", "quartic_curve", "paraboloid", "mixed",
                                 "quartic_quartic")] == [Fraction(1, 2), Fraction(1, 4), 1,
                                                         Fraction(3, 4), Fraction(1, 2)]
    with pytest.raises(ValidationError, match="no-fpt"):
        builtin_surface("saddle")
